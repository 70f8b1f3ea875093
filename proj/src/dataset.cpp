#include "mfb/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mfb/errors.hpp"

namespace mfb {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Mat Dataset::gather_inputs(const std::vector<int>& idx) const { return gather(inputs, idx); }

Mat Dataset::gather(const Mat& src, const std::vector<int>& idx) const {
  Mat out((int)idx.size(), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (int j = 0; j < src.cols(); ++j) out((int)i, j) = src(idx[i], j);
  return out;
}

void Dataset::validate() const {
  if (hf.rows() != n()) throw ShapeError("Dataset: hf row count mismatch");
  if (has_lf() && (lf.rows() != n() || lf.cols() != hf.cols()))
    throw ShapeError("Dataset: lf shape mismatch");
  std::vector<char> seen(n(), 0);
  for (int i : train_idx) {
    if (i < 0 || i >= n() || seen[i]) throw ShapeError("Dataset: bad train index");
    seen[i] = 1;
  }
  for (int i : test_idx) {
    if (i < 0 || i >= n() || seen[i]) throw ShapeError("Dataset: bad test index");
    seen[i] = 1;
  }
  for (int i = 0; i < n(); ++i)
    if (!seen[i]) throw ShapeError("Dataset: split does not cover all rows");
}

void Dataset::make_split(Rng& rng, double train_fraction) {
  std::vector<int> perm(n());
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n() - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  int n_train = (int)(train_fraction * n());
  train_idx.assign(perm.begin(), perm.begin() + n_train);
  test_idx.assign(perm.begin() + n_train, perm.end());
}

void Dataset::make_block_split(int n_train) {
  if (n_train < 1 || n_train > n()) throw ConfigError("Dataset: bad block split size");
  train_idx.resize(n_train);
  std::iota(train_idx.begin(), train_idx.end(), 0);
  test_idx.resize(n() - n_train);
  std::iota(test_idx.begin(), test_idx.end(), n_train);
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("save_dataset: cannot write " + path);
  for (int j = 0; j < ds.dim(); ++j) out << (j ? "," : "") << "x" << (j + 1);
  for (int j = 0; j < ds.outputs(); ++j) out << ",hf_" << (j + 1);
  if (ds.has_lf())
    for (int j = 0; j < ds.outputs(); ++j) out << ",lf_" << (j + 1);
  out << "\n";
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) out << (j ? "," : "") << fmt17(ds.inputs(i, j));
    for (int j = 0; j < ds.outputs(); ++j) out << "," << fmt17(ds.hf(i, j));
    if (ds.has_lf())
      for (int j = 0; j < ds.outputs(); ++j) out << "," << fmt17(ds.lf(i, j));
    out << "\n";
  }
  std::ofstream side(path + ".split");
  if (!side) throw ConfigError("save_dataset: cannot write " + path + ".split");
  side << "scheme " << (ds.scheme == SamplingScheme::uniform ? "uniform" : "latin_hypercube")
       << "\n";
  side << "train";
  for (int i : ds.train_idx) side << " " << i;
  side << "\ntest";
  for (int i : ds.test_idx) side << " " << i;
  side << "\n";
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_dataset: cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("load_dataset: empty file " + path);

  int d = 0, m = 0, mlf = 0;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.rfind("x", 0) == 0) ++d;
      else if (col.rfind("hf_", 0) == 0) ++m;
      else if (col.rfind("lf_", 0) == 0) ++mlf;
      else throw ConfigError("load_dataset: unknown column " + col);
    }
  }
  if (d < 1 || m < 1 || (mlf != 0 && mlf != m))
    throw ConfigError("load_dataset: malformed header in " + path);

  std::vector<double> vals;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    int count = 0;
    while (std::getline(ls, tok, ',')) {
      vals.push_back(std::stod(tok));
      ++count;
    }
    if (count != d + m + mlf) throw ConfigError("load_dataset: bad row in " + path);
    ++rows;
  }

  Dataset ds;
  ds.inputs.resize(rows, d);
  ds.hf.resize(rows, m);
  if (mlf) ds.lf.resize(rows, m);
  for (int i = 0; i < rows; ++i) {
    const double* r = vals.data() + (std::size_t)i * (d + m + mlf);
    for (int j = 0; j < d; ++j) ds.inputs(i, j) = r[j];
    for (int j = 0; j < m; ++j) ds.hf(i, j) = r[d + j];
    for (int j = 0; j < mlf; ++j) ds.lf(i, j) = r[d + m + j];
  }

  std::ifstream side(path + ".split");
  if (!side) throw ConfigError("load_dataset: missing sidecar " + path + ".split");
  std::string word;
  while (side >> word) {
    if (word == "scheme") {
      side >> word;
      ds.scheme = word == "latin_hypercube" ? SamplingScheme::latin_hypercube
                                            : SamplingScheme::uniform;
    } else if (word == "train" || word == "test") {
      auto& v = word == "train" ? ds.train_idx : ds.test_idx;
      std::string rest;
      std::getline(side, rest);
      std::istringstream rs(rest);
      int i;
      while (rs >> i) v.push_back(i);
    }
  }
  ds.validate();
  return ds;
}

}  // namespace mfb
