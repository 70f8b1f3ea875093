#pragma once

#include <vector>

#include "mfb/mat.hpp"
#include "mfb/rng.hpp"

namespace mfb {

/// n iid uniform points in the box [lo, hi]^d.
Mat sample_uniform_box(const std::vector<double>& lo, const std::vector<double>& hi, int n,
                       Rng& rng);

/// Latin hypercube design with the maximin criterion: the best of
/// `candidates` random LHS designs by minimum pairwise distance (computed in
/// the unit cube), mapped to the box.
Mat latin_hypercube_maximin(const std::vector<double>& lo, const std::vector<double>& hi, int n,
                            Rng& rng, int candidates = 100);

/// Halton low-discrepancy sequence in [0,1)^d (prime bases), for quadrature.
Mat halton_sequence(int n, int dim, int skip = 20);

}  // namespace mfb
