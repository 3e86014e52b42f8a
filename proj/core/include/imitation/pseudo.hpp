#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imitation/data.hpp"
#include "imitation/gp.hpp"
#include "imitation/linalg.hpp"
#include "imitation/optim.hpp"

namespace imitation {

/// A synthetic training input carrying the reference's soft prediction.
struct PseudoExample {
  std::vector<double> x;
  std::vector<double> ref_probs;
  double sigma = 0.0;
  double weight = 1.0;
  AdamState optimizer;  // only meaningful for members of the next set
};

/// The frozen set the target trains on and the set being moved adversarially.
///
/// After t merges |current| = (t+1)·n0 and |next| = n0.
struct PseudoSets {
  std::vector<PseudoExample> current;
  std::vector<PseudoExample> next;
  std::size_t step = 0;
  std::size_t n0 = 0;
};

/// Labels each initial point with the reference and sets up both sets.
PseudoSets make_pseudo_sets(const Matrix& initial, const GpEnsemble& reference,
                            const AdamHyper& pseudo_optimizer);

/// Copy-merge: the old next joins current, and a fresh copy of it (new
/// optimizer state) becomes the next set. Duplicates are kept.
PseudoSets merge_and_advance(PseudoSets sets);

/// Refreshes ref_probs and sigma of every example from the reference.
void relabel(std::span<PseudoExample> examples, const GpEnsemble& reference);

Matrix stack_points(std::span<const PseudoExample> examples);

/// Mixture of pairwise interpolation and Gaussian jitter around labeled points.
///
/// round(interp_fraction·count) points are u·xᵢ + (1−u)·xⱼ for distinct random
/// i, j and u ~ U(0,1); the rest are xᵢ plus N(0, (jitter_scale·stdₖ)²) noise
/// per dimension k, stdₖ being the labeled set's per-dimension deviation.
Matrix init_pseudo(const Dataset& labeled, std::size_t count, double interp_fraction,
                   double jitter_scale, std::uint64_t seed);

/// resolution² points on a regular 2-d lattice; bounds = {xmin, xmax, ymin, ymax}.
Matrix dense_grid_pseudo(std::span<const double> bounds, std::size_t resolution);

/// λ̂2·exp(−log(λ̂2/λ̄2)·σₙ/σ̄) with σ̄ the mean of sigmas; all λ̄2 when σ̄ = 0.
std::vector<double> fidelity_weights(std::span<const double> sigmas, double lambda_hat2,
                                     double lambda_bar2);

}  // namespace imitation
