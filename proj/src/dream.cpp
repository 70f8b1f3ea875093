#include "mfb/dream.hpp"

#include <cmath>
#include <condition_variable>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "mfb/errors.hpp"

namespace mfb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Minimal persistent pool: run the same job for indices 0..n-1 each round.
class WorkerPool {
 public:
  explicit WorkerPool(int threads) {
    for (int t = 1; t < threads; ++t) workers_.emplace_back([this] { worker(); });
  }
  ~WorkerPool() {
    {
      std::unique_lock lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  void run(int n, const std::function<void(int)>& job) {
    if (workers_.empty()) {
      for (int i = 0; i < n; ++i) job(i);
      return;
    }
    {
      std::unique_lock lk(mu_);
      job_ = &job;
      next_ = 0;
      pending_ = n;
      total_ = n;
      ++round_;
    }
    cv_.notify_all();
    help();
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;  // still under the lock: workers read job_ in their predicate
  }

 private:
  void help() {
    for (;;) {
      int i;
      {
        std::unique_lock lk(mu_);
        if (next_ >= total_) return;
        i = next_++;
      }
      (*job_)(i);
      std::unique_lock lk(mu_);
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }
  void worker() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stop_ || (job_ && round_ != seen && next_ < total_); });
        if (stop_) return;
        seen = round_;
      }
      help();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int)>* job_ = nullptr;
  int next_ = 0, total_ = 0, pending_ = 0;
  std::uint64_t round_ = 0;
  bool stop_ = false;
};

double reflect_into(double v, double lo, double hi) {
  double w = hi - lo;
  if (w <= 0) return lo;
  // fold into a 2w-periodic triangle wave
  double u = std::fmod(v - lo, 2.0 * w);
  if (u < 0) u += 2.0 * w;
  return lo + (u <= w ? u : 2.0 * w - u);
}

}  // namespace

std::vector<double> gelman_rubin(const ChainHistory& h) {
  if (h.n_chains < 2) throw ConfigError("gelman_rubin: need at least 2 chains");
  int start = h.n_iter / 2;
  int n = h.n_iter - start;
  if (n < 100) throw ConfigError("gelman_rubin: insufficient history (need >= 100 retained)");
  int m = h.n_chains;
  std::vector<double> psrf(h.dim);
  for (int j = 0; j < h.dim; ++j) {
    std::vector<double> cmean(m, 0.0), cvar(m, 0.0);
    for (int c = 0; c < m; ++c) {
      for (int it = start; it < h.n_iter; ++it) cmean[c] += h.state(it, c, j);
      cmean[c] /= n;
      for (int it = start; it < h.n_iter; ++it) {
        double d = h.state(it, c, j) - cmean[c];
        cvar[c] += d * d;
      }
      cvar[c] /= (n - 1);
    }
    double grand = 0.0;
    for (int c = 0; c < m; ++c) grand += cmean[c];
    grand /= m;
    double b_over_n = 0.0, w = 0.0;
    for (int c = 0; c < m; ++c) {
      b_over_n += (cmean[c] - grand) * (cmean[c] - grand);
      w += cvar[c];
    }
    b_over_n /= (m - 1);
    w /= m;
    if (w <= 0.0) {
      psrf[j] = b_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
      continue;
    }
    double vhat = (double)(n - 1) / n * w + b_over_n + b_over_n / m;
    psrf[j] = std::sqrt(std::max(vhat / w, 1.0));
  }
  return psrf;
}

DreamResult dream_sample(const Posterior& post, const DreamOptions& opt, double gr_threshold) {
  post.prior.validate();
  post.likelihood.validate();
  if (opt.n_chains < 3)
    throw ConfigError("dream_sample: differential-evolution proposals need >= 3 chains");
  if (opt.n_iter < 2) throw ConfigError("dream_sample: need at least 2 iterations");
  const int d = post.dim();
  if (d > 64) throw ConfigError("dream_sample: dimensions above 64 unsupported");
  const int nc = opt.n_chains;
  const int ncr = std::max(1, opt.n_cr);

  Rng rng(opt.seed);
  Mat X(nc, d);
  std::vector<double> lp(nc, kNegInf);
  for (int c = 0; c < nc; ++c) {
    for (int tries = 0; tries < 100; ++tries) {
      auto x0 = post.prior.sample(rng);
      double v = post.log_posterior(x0.data());
      if (std::isfinite(v)) {
        for (int j = 0; j < d; ++j) X(c, j) = x0[j];
        lp[c] = v;
        break;
      }
    }
    if (!std::isfinite(lp[c]))
      throw NumericError("dream_sample: could not find a finite-posterior start");
  }

  DreamResult res;
  res.history.n_chains = nc;
  res.history.dim = d;
  res.history.n_iter = opt.n_iter;
  res.history.states.resize((std::size_t)opt.n_iter * nc * d);
  res.history.logp.resize((std::size_t)opt.n_iter * nc);

  std::vector<double> pcr(ncr, 1.0 / ncr);
  std::vector<double> cr_gain(ncr, 1.0);   // normalized jump distance per candidate
  std::vector<long> cr_uses(ncr, 0);
  const int burn_end = opt.n_iter / 2;

  Mat prop(nc, d);
  std::vector<double> prop_lp(nc);
  std::vector<double> accept_u(nc);
  std::vector<int> cr_pick(nc);
  std::vector<double> width(d);
  for (int j = 0; j < d; ++j) width[j] = post.prior.hi[j] - post.prior.lo[j];

  WorkerPool pool(std::max(1, opt.n_threads));
  long accepted = 0, accepted_window = 0;
  long window_count = 0;

  for (int it = 0; it < opt.n_iter; ++it) {
    bool unit_gamma = opt.gamma_unit_every > 0 && (it % opt.gamma_unit_every) == opt.gamma_unit_every - 1;

    // per-dimension spread of the current states, for jump normalization
    std::vector<double> sd(d, 0.0);
    if (opt.adapt_cr && it < burn_end) {
      for (int j = 0; j < d; ++j) {
        double m = 0;
        for (int c = 0; c < nc; ++c) m += X(c, j);
        m /= nc;
        double v = 0;
        for (int c = 0; c < nc; ++c) v += (X(c, j) - m) * (X(c, j) - m);
        sd[j] = std::sqrt(v / (nc - 1));
      }
    }

    // sequential proposal construction (all randomness lives here)
    for (int c = 0; c < nc; ++c) {
      int delta = 1 + rng.uniform_int(3);
      double pairdiff[64] = {};
      for (int a = 0; a < delta; ++a) {
        int r1 = rng.uniform_int(nc - 1);
        if (r1 >= c) ++r1;
        int r2 = rng.uniform_int(nc - 1);
        if (r2 >= c) ++r2;
        while (r2 == r1 && nc > 2) {
          r2 = rng.uniform_int(nc - 1);
          if (r2 >= c) ++r2;
        }
        for (int j = 0; j < d; ++j) pairdiff[j] += X(r1, j) - X(r2, j);
      }
      // crossover subset
      int m_pick = 0;
      {
        double u = rng.uniform();
        double acc = 0.0;
        for (int m2 = 0; m2 < ncr; ++m2) {
          acc += pcr[m2];
          if (u <= acc || m2 == ncr - 1) {
            m_pick = m2;
            break;
          }
        }
      }
      cr_pick[c] = m_pick;
      double cr = (double)(m_pick + 1) / (double)ncr;
      bool update[64];
      int dprime = 0;
      for (int j = 0; j < d; ++j) {
        update[j] = rng.uniform() < cr;
        if (update[j]) ++dprime;
      }
      if (dprime == 0) {
        update[rng.uniform_int(d)] = true;
        dprime = 1;
      }
      double gamma = unit_gamma ? 1.0 : 2.38 / std::sqrt(2.0 * delta * dprime);
      for (int j = 0; j < d; ++j) {
        if (!update[j]) {
          prop(c, j) = X(c, j);
          continue;
        }
        double e = rng.uniform(-opt.proposal_noise, opt.proposal_noise);
        double jit = rng.uniform(-1.0, 1.0) * opt.jitter_rel * width[j];
        double v = X(c, j) + (1.0 + e) * gamma * pairdiff[j] + jit;
        prop(c, j) = reflect_into(v, post.prior.lo[j], post.prior.hi[j]);
      }
      accept_u[c] = rng.uniform();
    }

    // posterior evaluations may run concurrently; evaluators are read-only
    const std::function<void(int)> job = [&](int c) {
      prop_lp[c] = post.log_posterior(prop.row_ptr(c));
    };
    pool.run(nc, job);

    for (int c = 0; c < nc; ++c) {
      bool accept = prop_lp[c] >= lp[c] || std::log(accept_u[c]) < prop_lp[c] - lp[c];
      if (accept) {
        ++accepted;
        ++accepted_window;
        if (opt.adapt_cr && it < burn_end) {
          double jump = 0.0;
          for (int j = 0; j < d; ++j) {
            if (sd[j] > 0) {
              double z = (prop(c, j) - X(c, j)) / sd[j];
              jump += z * z;
            }
          }
          cr_gain[cr_pick[c]] += jump;
        }
        for (int j = 0; j < d; ++j) X(c, j) = prop(c, j);
        lp[c] = prop_lp[c];
      }
      if (opt.adapt_cr && it < burn_end) ++cr_uses[cr_pick[c]];
    }

    if (opt.adapt_cr && it < burn_end && (it + 1) % 10 == 0) {
      double total = 0.0;
      for (int m2 = 0; m2 < ncr; ++m2) total += cr_gain[m2] / std::max<long>(1, cr_uses[m2]);
      if (total > 0) {
        for (int m2 = 0; m2 < ncr; ++m2)
          pcr[m2] = (cr_gain[m2] / std::max<long>(1, cr_uses[m2])) / total;
      }
    }

    for (int c = 0; c < nc; ++c) {
      for (int j = 0; j < d; ++j)
        res.history.states[((std::size_t)it * nc + c) * d + j] = X(c, j);
      res.history.logp[(std::size_t)it * nc + c] = lp[c];
    }

    if (++window_count >= opt.stagnation_window) {
      if (accepted_window == 0)
        throw NumericError("dream_sample: all chains stagnated over " +
                           std::to_string(opt.stagnation_window) + " iterations");
      accepted_window = 0;
      window_count = 0;
    }
  }

  res.acceptance_rate = (double)accepted / ((double)opt.n_iter * nc);
  res.pcr = pcr;
  if (opt.n_iter - opt.n_iter / 2 >= 100) {
    res.psrf = gelman_rubin(res.history);
    res.converged = true;
    for (double v : res.psrf) res.converged = res.converged && v < gr_threshold;
  }

  int start = opt.n_iter / 2;
  int rows = (opt.n_iter - start) * nc;
  res.samples.resize(rows, d);
  res.sample_logp.resize(rows);
  int r = 0;
  for (int it = start; it < opt.n_iter; ++it)
    for (int c = 0; c < nc; ++c, ++r) {
      for (int j = 0; j < d; ++j) res.samples(r, j) = res.history.state(it, c, j);
      res.sample_logp[r] = res.history.lp(it, c);
    }
  return res;
}

}  // namespace mfb
