#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mpsr/dataset.hpp"
#include "mpsr/inference.hpp"
#include "mpsr/reduction.hpp"

namespace mpsr {

struct RunConfig {
    std::string map_id = "cos-sin";
    std::size_t chi = 32;
    Strategy strategy = Strategy::tree;
    std::size_t leaf_batch = 0; // 0 means chi
    int sweeps = 2;
    double tol = 1e-9;
    unsigned downscale = 2;
    std::optional<double> binarize;
    PixelOrder order = PixelOrder::raster;
    std::uint64_t seed = 0;
    int workers = 1;

    ReductionPlan plan() const;
    PreprocessOptions preprocess_options() const;
};

/// Preprocesses the raw training set per cfg, then builds one unit-norm
/// digit wavefunction per label. Deterministic for a fixed config, whatever
/// cfg.workers is.
ModelSet pretrain(const Dataset& raw_train, const RunConfig& cfg);

/// Applies the preprocessing a model set was trained with (downscale factor
/// inferred from the shapes) to a raw test set.
Dataset prepare_like(const ModelSet& set, const Dataset& raw);

/// prepare_like + evaluate_accuracy.
AccuracyReport classify_dataset(const ModelSet& set, const Dataset& raw_test,
                                int workers = 1);

} // namespace mpsr
