#pragma once

#include <span>
#include <string>
#include <vector>

#include "mpsr/inference.hpp"
#include "mpsr/tensor.hpp"

namespace mpsr {

/// Binary model container: magic "MPSM", u16 format version, little-endian
/// metadata and tensor records, CRC32 of the payload at the end. Round trips
/// bit-exactly.
void save_model(const ModelSet& set, const std::string& path);
ModelSet load_model(const std::string& path);

struct MetricRecord {
    std::size_t chi = 0;
    std::string strategy;
    std::string map_id;
    double accuracy = 0.0;
    double mean_sq_overlap = 0.0;
    double wall_time_s = 0.0;
};

/// CSV with a header row: chi,strategy,map_id,accuracy,mean_sq_overlap,
/// wall_time_s.
void export_metrics(std::span<const MetricRecord> records,
                    const std::string& path);

/// 8-bit binary PGM (P5) for grey pixels in [0,1].
void export_image_pgm(std::span<const double> pixels, std::size_t height,
                      std::size_t width, const std::string& path);

/// ASCII PBM (P1) for 0/1 pixels.
void export_image_pbm(std::span<const std::size_t> bits, std::size_t height,
                      std::size_t width, const std::string& path);

/// CSV of a complex curve: columns x,re,im,abs.
void export_curve(std::span<const double> xs, std::span<const Complex> values,
                  const std::string& path);

} // namespace mpsr
