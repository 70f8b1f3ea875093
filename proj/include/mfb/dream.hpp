#pragma once

#include <cstdint>
#include <vector>

#include "mfb/likelihood.hpp"
#include "mfb/mat.hpp"

namespace mfb {

struct DreamOptions {
  int n_chains = 5;
  int n_iter = 10000;
  std::uint64_t seed = 0;
  int n_cr = 3;             // candidate crossover probabilities
  bool adapt_cr = true;     // adapt during burn-in, frozen afterwards
  int gamma_unit_every = 5; // every k-th generation jumps with gamma = 1
  double proposal_noise = 0.05;  // multiplicative U(-e, e) on the jump
  double jitter_rel = 1e-6;      // additive U(-1,1) jitter x box width
  int n_threads = 1;             // concurrent posterior evaluations per generation
  int stagnation_window = 1000;  // iterations with zero accepts -> error
};

/// Full per-iteration state record of all chains.
struct ChainHistory {
  int n_chains = 0, dim = 0, n_iter = 0;
  std::vector<double> states;  // [iter][chain][dim]
  std::vector<double> logp;    // [iter][chain]

  double state(int it, int c, int j) const {
    return states[((std::size_t)it * n_chains + c) * dim + j];
  }
  double lp(int it, int c) const { return logp[(std::size_t)it * n_chains + c]; }
};

struct DreamResult {
  ChainHistory history;
  Mat samples;                      // post burn-in (second half), pooled over chains
  std::vector<double> sample_logp;  // matching rows of `samples`
  std::vector<double> psrf;         // per-dimension, over the second halves
  std::vector<double> pcr;          // final crossover probabilities
  double acceptance_rate = 0.0;
  bool converged = false;           // all psrf below the caller's threshold
};

/// Differential-evolution adaptive Metropolis sampling with randomized
/// subspace crossover, reflective box boundaries and half-run burn-in.
DreamResult dream_sample(const Posterior& post, const DreamOptions& opt,
                         double gr_threshold = 1.01);

/// Potential scale reduction factors over the second halves of the chains.
std::vector<double> gelman_rubin(const ChainHistory& history);

}  // namespace mfb
