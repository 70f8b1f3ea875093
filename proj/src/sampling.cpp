#include "mfb/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfb/errors.hpp"

namespace mfb {

namespace {

void check_box(const std::vector<double>& lo, const std::vector<double>& hi, int n) {
  if (lo.size() != hi.size() || lo.empty()) throw ConfigError("sampling: bad box");
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!(hi[j] > lo[j])) throw ConfigError("sampling: box bounds must satisfy lo < hi");
  if (n < 1) throw ConfigError("sampling: need n >= 1");
}

}  // namespace

Mat sample_uniform_box(const std::vector<double>& lo, const std::vector<double>& hi, int n,
                       Rng& rng) {
  check_box(lo, hi, n);
  int d = (int)lo.size();
  Mat x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(lo[j], hi[j]);
  return x;
}

Mat latin_hypercube_maximin(const std::vector<double>& lo, const std::vector<double>& hi, int n,
                            Rng& rng, int candidates) {
  check_box(lo, hi, n);
  int d = (int)lo.size();
  if (candidates < 1) candidates = 1;

  Mat best(n, d);
  double best_score = -1.0;
  std::vector<int> perm(n);
  Mat cand(n, d);
  for (int c = 0; c < candidates; ++c) {
    for (int j = 0; j < d; ++j) {
      std::iota(perm.begin(), perm.end(), 0);
      for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
      for (int i = 0; i < n; ++i) cand(i, j) = (perm[i] + rng.uniform()) / n;
    }
    double score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n && score > best_score; ++i)
      for (int k = i + 1; k < n; ++k) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
          double diff = cand(i, j) - cand(k, j);
          s += diff * diff;
        }
        score = std::min(score, s);
      }
    if (score > best_score) {
      best_score = score;
      best = cand;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) best(i, j) = lo[j] + (hi[j] - lo[j]) * best(i, j);
  return best;
}

Mat halton_sequence(int n, int dim, int skip) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  if (dim < 1 || dim > 10) throw ConfigError("halton_sequence: dim must be in [1,10]");
  Mat x(n, dim);
  for (int j = 0; j < dim; ++j) {
    int b = primes[j];
    for (int i = 0; i < n; ++i) {
      long long k = i + 1 + skip;
      double f = 1.0, r = 0.0;
      while (k > 0) {
        f /= b;
        r += f * (k % b);
        k /= b;
      }
      x(i, j) = r;
    }
  }
  return x;
}

}  // namespace mfb
