#pragma once

// Procedural 28x28 digit corpus in the MNIST layout, for desk-scale runs and
// self-contained acceptance testing when the real dataset is not on disk.
// Deterministic for a fixed seed.

#include <cstdint>

#include "mpsr/dataset.hpp"

namespace mpsr::synth {

/// per_class images of each digit 0..9, labels included, values on the
/// 1/255 grid so IDX round trips are lossless.
Dataset digits(std::size_t per_class, std::uint64_t seed);

} // namespace mpsr::synth
