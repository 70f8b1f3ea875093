#include "mfb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mfb/errors.hpp"

namespace mfb {

namespace {

double axis_weight(const std::vector<double>& axis, int i) {
  double h = (axis.back() - axis.front()) / (double)(axis.size() - 1);
  return (i == 0 || i + 1 == (int)axis.size()) ? h / 2.0 : h;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double PosteriorGrid::node_weight(std::size_t flat) const {
  double w = 1.0;
  for (int j = dim() - 1; j >= 0; --j) {
    int n = (int)axes[j].size();
    int idx = (int)(flat % n);
    flat /= n;
    w *= axis_weight(axes[j], idx);
  }
  return w;
}

std::vector<double> PosteriorGrid::node_coords(std::size_t flat) const {
  std::vector<double> x(dim());
  for (int j = dim() - 1; j >= 0; --j) {
    int n = (int)axes[j].size();
    x[j] = axes[j][flat % n];
    flat /= n;
  }
  return x;
}

std::size_t PosteriorGrid::argmax_density() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < density.size(); ++i)
    if (density[i] > density[best]) best = i;
  return best;
}

std::vector<double> PosteriorGrid::mean() const {
  std::vector<double> m(dim(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    double w = node_weight(i) * density[i];
    auto x = node_coords(i);
    for (int j = 0; j < dim(); ++j) m[j] += w * x[j];
  }
  return m;
}

Mat PosteriorGrid::covariance() const {
  auto m = mean();
  Mat c(dim(), dim());
  for (std::size_t i = 0; i < size(); ++i) {
    double w = node_weight(i) * density[i];
    auto x = node_coords(i);
    for (int a = 0; a < dim(); ++a)
      for (int b = 0; b < dim(); ++b) c(a, b) += w * (x[a] - m[a]) * (x[b] - m[b]);
  }
  return c;
}

double PosteriorGrid::covariance_trace() const {
  Mat c = covariance();
  double t = 0.0;
  for (int j = 0; j < dim(); ++j) t += c(j, j);
  return t;
}

double PosteriorGrid::rescaled_covariance_trace(const std::vector<double>& reference) const {
  if ((int)reference.size() != dim()) throw ShapeError("rescaled trace: reference size mismatch");
  Mat c = covariance();
  double t = 0.0;
  for (int j = 0; j < dim(); ++j) t += c(j, j) / (reference[j] * reference[j]);
  return t;
}

PosteriorGrid grid_posterior(const Posterior& post, const std::vector<int>& resolution) {
  int d = post.dim();
  if (d > 3) throw ConfigError("grid_posterior: gridding is limited to 3 dimensions");
  if ((int)resolution.size() != d) throw ConfigError("grid_posterior: resolution size mismatch");
  for (int r : resolution)
    if (r < 2) throw ConfigError("grid_posterior: need at least 2 nodes per dimension");

  PosteriorGrid g;
  g.axes.resize(d);
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) {
    int n = resolution[j];
    g.axes[j].resize(n);
    for (int i = 0; i < n; ++i)
      g.axes[j][i] =
          post.prior.lo[j] + (post.prior.hi[j] - post.prior.lo[j]) * (double)i / (double)(n - 1);
    total *= (std::size_t)n;
  }

  g.logv.resize(total);
  std::vector<double> x(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int j = d - 1; j >= 0; --j) {
      int n = (int)g.axes[j].size();
      x[j] = g.axes[j][rem % n];
      rem /= n;
    }
    g.logv[flat] = post.log_posterior(x.data());
  }

  double mx = -std::numeric_limits<double>::infinity();
  for (double v : g.logv) mx = std::max(mx, v);
  if (!std::isfinite(mx))
    throw NumericError("grid_posterior: posterior vanishes on the whole grid");
  g.density.resize(total);
  double z = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    g.density[i] = std::exp(g.logv[i] - mx);
    z += g.density[i] * g.node_weight(i);
  }
  if (!(z > 0)) throw NumericError("grid_posterior: zero normalization");
  double check = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    g.density[i] /= z;
    check += g.density[i] * g.node_weight(i);
  }
  g.integral_check = check;
  return g;
}

double hellinger(const PosteriorGrid& a, const PosteriorGrid& b) {
  if (a.dim() != b.dim()) throw ShapeError("hellinger: dimension mismatch");
  for (int j = 0; j < a.dim(); ++j)
    if (a.axes[j] != b.axes[j]) throw ShapeError("hellinger: grids must share axes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::sqrt(a.density[i]) - std::sqrt(b.density[i]);
    s += a.node_weight(i) * d * d;
  }
  return std::clamp(std::sqrt(0.5 * s), 0.0, 1.0);
}

void save_grid(const PosteriorGrid& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_grid: cannot write " + path);
  out << "mfbayes-grid v1\n";
  out << "dims " << g.dim() << "\n";
  for (int j = 0; j < g.dim(); ++j) {
    out << "axis " << g.axes[j].size();
    for (double v : g.axes[j]) out << " " << fmt17(v);
    out << "\n";
  }
  out << "logv " << g.logv.size() << "\n";
  for (std::size_t i = 0; i < g.logv.size(); ++i)
    out << fmt17(g.logv[i]) << (i + 1 < g.logv.size() ? " " : "\n");
  out << "density " << g.density.size() << "\n";
  for (std::size_t i = 0; i < g.density.size(); ++i)
    out << fmt17(g.density[i]) << (i + 1 < g.density.size() ? " " : "\n");
  out << "end\n";
}

PosteriorGrid load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_grid: cannot open " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "mfbayes-grid" || version != "v1")
    throw ConfigError("load_grid: bad header in " + path);
  PosteriorGrid g;
  std::string key;
  while (in >> key && key != "end") {
    if (key == "dims") {
      int d;
      in >> d;
      g.axes.resize(d);
    } else if (key == "axis") {
      std::size_t n;
      in >> n;
      for (auto& ax : g.axes) {
        if (!ax.empty()) continue;
        ax.resize(n);
        for (auto& v : ax) in >> v;
        break;
      }
    } else if (key == "logv") {
      std::size_t n;
      in >> n;
      g.logv.resize(n);
      for (auto& v : g.logv) in >> v;
    } else if (key == "density") {
      std::size_t n;
      in >> n;
      g.density.resize(n);
      for (auto& v : g.density) in >> v;
    } else {
      throw ConfigError("load_grid: unknown key " + key);
    }
  }
  double check = 0.0;
  for (std::size_t i = 0; i < g.density.size(); ++i) check += g.density[i] * g.node_weight(i);
  g.integral_check = check;
  return g;
}

}  // namespace mfb
