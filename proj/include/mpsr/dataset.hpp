#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpsr {

enum class PixelOrder : std::uint8_t { raster = 0, snake = 1 };

std::string to_string(PixelOrder order);
PixelOrder pixel_order_from_string(const std::string& s);

/// Images as rows of [0,1] values plus integer labels. pixel_order records
/// how rows map onto the height x width grid.
struct Dataset {
    std::size_t height = 0;
    std::size_t width = 0;
    PixelOrder pixel_order = PixelOrder::raster;
    std::vector<double> pixels; // count * height * width values
    std::vector<int> labels;
    std::vector<std::string> provenance;

    std::size_t count() const { return labels.size(); }
    std::size_t pixel_count() const { return height * width; }
    std::span<const double> image(std::size_t i) const {
        return {pixels.data() + i * pixel_count(), pixel_count()};
    }
    void validate() const;
};

/// Parses the big-endian IDX pair (image magic 0x00000803, label magic
/// 0x00000801); pixel bytes are scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Inverse of load_idx for values on the 1/255 grid (bytes are
/// round(v * 255)).
void write_idx(const Dataset& d, const std::string& images_path,
               const std::string& labels_path);

struct PreprocessOptions {
    unsigned downscale = 1; // f x f mean pooling; must divide height and width
    std::optional<double> binarize;
    PixelOrder order = PixelOrder::raster;
};

/// Mean-pool downscale, optional binarization at the threshold, then pixel
/// reordering. Input must be raster-ordered.
Dataset preprocess(const Dataset& d, const PreprocessOptions& opts);

} // namespace mpsr
