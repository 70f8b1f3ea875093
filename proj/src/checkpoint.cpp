#include "mfb/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfb/errors.hpp"

namespace mfb {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_mat(std::ostream& out, const std::string& name, const Mat& m) {
  out << "mat " << name << " " << m.rows() << " " << m.cols() << "\n";
  for (std::size_t i = 0; i < m.size(); ++i) out << fmt17(m[i]) << (i + 1 < m.size() ? " " : "");
  if (m.size()) out << "\n";
}

void write_std(std::ostream& out, const std::string& prefix, const Standardizer& st) {
  Mat mean(1, st.dim()), sd(1, st.dim());
  for (int j = 0; j < st.dim(); ++j) {
    mean[j] = st.mean[j];
    sd[j] = st.std[j];
  }
  write_mat(out, prefix + "_mean", mean);
  write_mat(out, prefix + "_std", sd);
}

void write_net(std::ostream& out, const std::string& prefix, const MlpNet& net) {
  out << "layers " << prefix;
  for (int s : net.layer_sizes) out << " " << s;
  out << "\n";
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    write_mat(out, prefix + "_w" + std::to_string(l), net.weights[l]);
    write_mat(out, prefix + "_b" + std::to_string(l), net.biases[l]);
  }
}

void write_cfg(std::ostream& out, const TrainConfig& cfg) {
  out << "epochs " << cfg.epochs << "\n";
  out << "learning_rate " << fmt17(cfg.learning_rate) << "\n";
  out << "scheduler_step " << fmt17(cfg.scheduler_step) << "\n";
  out << "weight_decay " << fmt17(cfg.weight_decay) << "\n";
  out << "seed " << cfg.seed << "\n";
}

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw ConfigError("checkpoint: cannot open " + path);
    std::string magic, version;
    in_ >> magic >> version;
    if (magic != "mfbayes-checkpoint" || version != "v1")
      throw ConfigError("checkpoint: bad header in " + path);
  }

  std::string key() {
    std::string k;
    if (!(in_ >> k)) throw ConfigError("checkpoint: truncated file " + path_);
    return k;
  }
  std::string word() { return key(); }
  double num() {
    double v;
    if (!(in_ >> v)) throw ConfigError("checkpoint: expected number in " + path_);
    return v;
  }
  long integer() {
    long v;
    if (!(in_ >> v)) throw ConfigError("checkpoint: expected integer in " + path_);
    return v;
  }
  Mat mat() {
    std::string tag = key();
    if (tag != "mat") throw ConfigError("checkpoint: expected mat, got " + tag);
    return mat_body().second;
  }
  std::pair<std::string, Mat> mat_body() {
    std::string name = key();
    int rows = (int)integer(), cols = (int)integer();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = num();
    return {name, m};
  }
  MlpNet net_body() {
    // caller already consumed "layers <prefix>"
    std::string line;
    std::getline(in_, line);
    std::istringstream ls(line);
    std::vector<int> sizes;
    int s;
    while (ls >> s) sizes.push_back(s);
    MlpNet net = MlpNet::zeros(sizes);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      key();  // "mat"
      net.weights[l] = mat_body().second;
      key();
      net.biases[l] = mat_body().second;
    }
    return net;
  }
  Standardizer std_body() {
    Standardizer st;
    key();
    Mat mean = mat_body().second;
    key();
    Mat sd = mat_body().second;
    st.mean.assign(mean.data(), mean.data() + mean.size());
    st.std.assign(sd.data(), sd.data() + sd.size());
    return st;
  }
  bool read_cfg_field(const std::string& k, TrainConfig& cfg) {
    if (k == "epochs") cfg.epochs = (int)integer();
    else if (k == "learning_rate") cfg.learning_rate = num();
    else if (k == "scheduler_step") cfg.scheduler_step = num();
    else if (k == "weight_decay") cfg.weight_decay = num();
    else if (k == "seed") cfg.seed = (std::uint64_t)integer();
    else return false;
    return true;
  }

 private:
  std::ifstream in_;
  std::string path_;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("checkpoint: cannot write " + path);
  out << "mfbayes-checkpoint v1\n";
  return out;
}

}  // namespace

void save_dense(const DenseSurrogate& s, const TrainConfig& cfg, const std::string& path) {
  auto out = open_out(path);
  out << "kind dense\n";
  out << "target " << target_name(s.target) << "\n";
  write_cfg(out, cfg);
  out << "final_train_loss " << fmt17(s.final_train_loss) << "\n";
  out << "train_mse " << fmt17(s.train_mse) << "\n";
  out << "test_mse " << fmt17(s.test_mse) << "\n";
  write_std(out, "in", s.in_std);
  write_std(out, "out", s.out_std);
  write_net(out, "net", s.net);
  out << "end\n";
}

DenseSurrogate load_dense(const std::string& path, TrainConfig* cfg_out) {
  Reader r(path);
  if (r.key() != "kind" || r.word() != "dense")
    throw ConfigError("checkpoint: not a dense surrogate: " + path);
  DenseSurrogate s;
  TrainConfig cfg;
  for (;;) {
    std::string k = r.key();
    if (k == "end") break;
    if (r.read_cfg_field(k, cfg)) continue;
    if (k == "target") s.target = target_from_name(r.word());
    else if (k == "final_train_loss") s.final_train_loss = r.num();
    else if (k == "train_mse") s.train_mse = r.num();
    else if (k == "test_mse") s.test_mse = r.num();
    else if (k == "mat") {
      auto [name, m] = r.mat_body();
      if (name == "in_mean") s.in_std.mean.assign(m.data(), m.data() + m.size());
      else if (name == "in_std") s.in_std.std.assign(m.data(), m.data() + m.size());
      else if (name == "out_mean") s.out_std.mean.assign(m.data(), m.data() + m.size());
      else if (name == "out_std") s.out_std.std.assign(m.data(), m.data() + m.size());
      else throw ConfigError("checkpoint: unexpected mat " + name);
    } else if (k == "layers") {
      r.word();  // prefix
      s.net = r.net_body();
    } else {
      throw ConfigError("checkpoint: unknown key " + k);
    }
  }
  if (cfg_out) *cfg_out = cfg;
  return s;
}

void save_neuram(const NeurAmModel& m, const TrainConfig& cfg, const std::string& path) {
  auto out = open_out(path);
  out << "kind neuram\n";
  out << "target " << target_name(m.target) << "\n";
  write_cfg(out, cfg);
  out << "latent_dim " << m.latent_dim << "\n";
  out << "final_train_loss " << fmt17(m.final_train_loss) << "\n";
  out << "train_terms " << fmt17(m.train_terms[0]) << " " << fmt17(m.train_terms[1]) << " "
      << fmt17(m.train_terms[2]) << "\n";
  out << "test_terms " << fmt17(m.test_terms[0]) << " " << fmt17(m.test_terms[1]) << " "
      << fmt17(m.test_terms[2]) << "\n";
  out << "train_mse " << fmt17(m.train_mse) << "\n";
  out << "test_mse " << fmt17(m.test_mse) << "\n";
  write_std(out, "in", m.in_std);
  write_std(out, "out", m.out_std);
  write_net(out, "enc", m.encoder);
  write_net(out, "dec", m.decoder);
  write_net(out, "sur", m.surrogate);
  out << "end\n";
}

NeurAmModel load_neuram(const std::string& path, TrainConfig* cfg_out) {
  Reader r(path);
  if (r.key() != "kind" || r.word() != "neuram")
    throw ConfigError("checkpoint: not a neuram model: " + path);
  NeurAmModel m;
  TrainConfig cfg;
  for (;;) {
    std::string k = r.key();
    if (k == "end") break;
    if (r.read_cfg_field(k, cfg)) continue;
    if (k == "target") m.target = target_from_name(r.word());
    else if (k == "latent_dim") m.latent_dim = (int)r.integer();
    else if (k == "final_train_loss") m.final_train_loss = r.num();
    else if (k == "train_terms") {
      m.train_terms = {r.num(), r.num(), r.num()};
    } else if (k == "test_terms") {
      m.test_terms = {r.num(), r.num(), r.num()};
    } else if (k == "train_mse") m.train_mse = r.num();
    else if (k == "test_mse") m.test_mse = r.num();
    else if (k == "mat") {
      auto [name, mm] = r.mat_body();
      if (name == "in_mean") m.in_std.mean.assign(mm.data(), mm.data() + mm.size());
      else if (name == "in_std") m.in_std.std.assign(mm.data(), mm.data() + mm.size());
      else if (name == "out_mean") m.out_std.mean.assign(mm.data(), mm.data() + mm.size());
      else if (name == "out_std") m.out_std.std.assign(mm.data(), mm.data() + mm.size());
      else throw ConfigError("checkpoint: unexpected mat " + name);
    } else if (k == "layers") {
      std::string prefix = r.word();
      MlpNet net = r.net_body();
      if (prefix == "enc") m.encoder = std::move(net);
      else if (prefix == "dec") m.decoder = std::move(net);
      else if (prefix == "sur") m.surrogate = std::move(net);
      else throw ConfigError("checkpoint: unexpected net " + prefix);
    } else {
      throw ConfigError("checkpoint: unknown key " + k);
    }
  }
  if (cfg_out) *cfg_out = cfg;
  return m;
}

void save_flow(const FlowModel& f, const TrainConfig& cfg, const std::string& path) {
  auto out = open_out(path);
  out << "kind flow\n";
  out << "dim " << f.dim() << "\n";
  out << "arch " << f.arch().layers << " " << f.arch().neurons << " " << f.arch().blocks << "\n";
  write_cfg(out, cfg);
  out << "train_loglik " << fmt17(f.train_loglik) << "\n";
  out << "test_loglik " << fmt17(f.test_loglik) << "\n";
  write_std(out, "in", f.standardizer());
  if (f.dim() == 1) {
    out << "stages " << f.stages().size() << "\n";
    for (std::size_t i = 0; i < f.stages().size(); ++i) {
      const auto& st = f.stages()[i];
      out << "affine " << fmt17(st.log_scale) << " " << fmt17(st.shift) << "\n";
      write_mat(out, "theta_w" + std::to_string(i), st.theta_w);
      write_mat(out, "theta_h" + std::to_string(i), st.theta_h);
      write_mat(out, "theta_d" + std::to_string(i), st.theta_d);
    }
  } else {
    out << "couplings " << f.couplings().size() << "\n";
    for (std::size_t i = 0; i < f.couplings().size(); ++i) {
      const auto& c = f.couplings()[i];
      write_mat(out, "mask" + std::to_string(i), c.mask);
      write_net(out, "s" + std::to_string(i), c.s_net);
      write_net(out, "t" + std::to_string(i), c.t_net);
    }
  }
  out << "end\n";
}

FlowModel load_flow(const std::string& path, TrainConfig* cfg_out) {
  Reader r(path);
  if (r.key() != "kind" || r.word() != "flow")
    throw ConfigError("checkpoint: not a flow: " + path);
  TrainConfig cfg;
  int dim = 1;
  FlowArch arch;
  Standardizer st;
  std::vector<AffineCoupling> couplings;
  std::vector<ScalarStage> stages;
  double train_ll = 0, test_ll = 0;
  for (;;) {
    std::string k = r.key();
    if (k == "end") break;
    if (r.read_cfg_field(k, cfg)) continue;
    if (k == "dim") dim = (int)r.integer();
    else if (k == "arch") {
      arch.layers = (int)r.integer();
      arch.neurons = (int)r.integer();
      arch.blocks = (int)r.integer();
    } else if (k == "train_loglik") train_ll = r.num();
    else if (k == "test_loglik") test_ll = r.num();
    else if (k == "mat") {
      st = [&] {
        Standardizer s;
        auto [name, m] = r.mat_body();
        s.mean.assign(m.data(), m.data() + m.size());
        r.key();
        auto [name2, m2] = r.mat_body();
        s.std.assign(m2.data(), m2.data() + m2.size());
        return s;
      }();
    } else if (k == "stages") {
      int n = (int)r.integer();
      stages.resize(n);
      for (int i = 0; i < n; ++i) {
        if (r.key() != "affine") throw ConfigError("checkpoint: expected affine");
        stages[i].log_scale = r.num();
        stages[i].shift = r.num();
        r.key();
        stages[i].theta_w = r.mat_body().second;
        r.key();
        stages[i].theta_h = r.mat_body().second;
        r.key();
        stages[i].theta_d = r.mat_body().second;
      }
    } else if (k == "couplings") {
      int n = (int)r.integer();
      couplings.resize(n);
      for (int i = 0; i < n; ++i) {
        r.key();
        couplings[i].mask = r.mat_body().second;
        if (r.key() != "layers") throw ConfigError("checkpoint: expected coupling net");
        r.word();
        couplings[i].s_net = r.net_body();
        if (r.key() != "layers") throw ConfigError("checkpoint: expected coupling net");
        r.word();
        couplings[i].t_net = r.net_body();
      }
    } else {
      throw ConfigError("checkpoint: unknown key " + k);
    }
  }
  FlowModel f = flow_from_parts(dim, arch, std::move(st), std::move(couplings), std::move(stages));
  f.train_loglik = train_ll;
  f.test_loglik = test_ll;
  if (cfg_out) *cfg_out = cfg;
  return f;
}

std::string checkpoint_kind(const std::string& path) {
  Reader r(path);
  if (r.key() != "kind") throw ConfigError("checkpoint: missing kind in " + path);
  return r.word();
}

}  // namespace mfb
