#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpsr/feature_map.hpp"
#include "mpsr/mps.hpp"

namespace mpsr {

using ImageView = std::span<const double>;

enum class Strategy : std::uint8_t { direct, tree };

struct ReductionPlan {
    std::size_t chi = 32;
    Strategy strategy = Strategy::tree;
    std::size_t leaf_batch = 0; // 0 means chi
    int sweeps = 2;             // variational polish after each compression
    double tol = 1e-9;
    std::uint64_t seed = 0;     // reserved for stochastic tie-breaking
    int worker_limit = 1;
    /// Guard for the direct strategy: the exact sum may hold at most this
    /// many tensor entries.
    std::size_t max_sum_entries = 200'000'000;

    std::size_t resolved_leaf_batch() const {
        return leaf_batch == 0 ? chi : leaf_batch;
    }
};

/// Exact MPS of the unnormalized sum of the batch's product states; interior
/// bond dimension equals the batch size.
MPS exact_batch(const LocalFeatureMap& map, std::span<const ImageView> xs);

/// compress(add(a, b)) to plan.chi. Unit-norm output; log_scale carries the
/// magnitude of the running sum.
MPS reduce_pair(const MPS& a, const MPS& b, const ReductionPlan& plan);

/// Left-balanced fan-in reduction over exact leaves of plan.leaf_batch
/// images. Deterministic for a fixed plan; same-level pairs may run on up to
/// plan.worker_limit threads without changing the result.
MPS tree_reduce(const LocalFeatureMap& map, std::span<const ImageView> images,
                const ReductionPlan& plan);

/// Builds the exact sum of all encodings, then fits a bond-chi MPS to it
/// variationally. Guarded by plan.max_sum_entries.
MPS direct_sum_compress(const LocalFeatureMap& map,
                        std::span<const ImageView> images,
                        const ReductionPlan& plan);

struct OverlapOptions {
    std::size_t max_pairs = 4'000'000;
    /// When the pairwise C_Norm^2 sum would exceed max_pairs terms, estimate
    /// it from a fixed-seed random subset instead of failing.
    bool allow_subset = false;
    std::size_t subset_size = 2000;
    std::uint64_t seed = 1;
};

struct OverlapResult {
    double value = 0.0;
    bool exact = true;
    std::size_t images_used = 0;
};

/// Mean squared overlap |<model|Sigma>|^2 between a unit-norm model and the
/// unit-normalized exact sum of the images, evaluated through pairwise
/// product-state inner products (no sum MPS is built).
OverlapResult mean_sq_overlap(const MPS& model, const LocalFeatureMap& map,
                              std::span<const ImageView> images,
                              const OverlapOptions& opts = {});

/// log of C_Norm^2 = sum_ij <Phi(x_i)|Phi(x_j)> for the image set (real
/// positive by construction).
double log_cnorm_sq(const LocalFeatureMap& map,
                    std::span<const ImageView> images);

} // namespace mpsr
