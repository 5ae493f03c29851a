#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpsr/dataset.hpp"
#include "mpsr/feature_map.hpp"
#include "mpsr/mps.hpp"
#include "mpsr/reduction.hpp"

namespace mpsr {

/// One trained digit wavefunction: a unit-norm MPS plus the encoding
/// metadata needed to use it.
struct ClassModel {
    int label = 0;
    MPS state;            // unit norm, log_scale 0
    std::string map_id;
    double log_cnorm = 0.0; // log magnitude of the underlying training sum
    std::size_t chi = 0;
    PixelOrder pixel_order = PixelOrder::raster;
};

struct ModelSet {
    std::vector<ClassModel> models; // sorted by label, labels unique
    std::size_t height = 0;
    std::size_t width = 0;

    const ClassModel* find(int label) const;
    /// Shared-metadata consistency (map, chi, order, site count) and label
    /// uniqueness; throws on violation.
    void validate() const;
};

/// 2 log |<Phi(x)|state>|; orthogonal inputs return the finite floor -1e9.
double log_likelihood(const ClassModel& model, std::span<const double> x);

/// Label of the largest log-likelihood; ties go to the smallest label.
int classify(const ModelSet& set, std::span<const double> x);

struct AccuracyReport {
    double accuracy = 0.0;
    std::size_t total = 0;
    std::size_t correct = 0;
    std::vector<int> labels;
    /// confusion[i][j]: true label labels[i] predicted as labels[j].
    std::vector<std::vector<std::size_t>> confusion;
    /// Test items whose label no model covers (always counted as misses).
    std::size_t unmatched = 0;
};

AccuracyReport evaluate_accuracy(const ModelSet& set, const Dataset& test,
                                 int workers = 1);

/// Ancestral Born-rule sample; the config is the binary image.
SpinConfig sample_binary(const ClassModel& model, std::mt19937_64& rng);

/// Two-stage sample: discrete config from the MPS, then each pixel from the
/// orthonormal map conditioned on its component.
std::vector<double> sample_grey(const ClassModel& model,
                                const LocalFeatureMap& ortho_map,
                                std::mt19937_64& rng);

/// (sum_i <Phi(x)|Phi(x_i)>) / C_Norm, term by term; the amplitude estimate
/// carried by the uncompressed sum state, no MPS sum is built.
LogComplex kde_amplitude(const LocalFeatureMap& map,
                         std::span<const ImageView> images,
                         std::span<const double> x,
                         std::size_t max_pairs = 4'000'000);

} // namespace mpsr
