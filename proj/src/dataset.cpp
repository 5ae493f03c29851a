#include "mpsr/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <zlib.h>

#include "mpsr/errors.hpp"

namespace mpsr {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

struct Reader {
    std::ifstream in;
    std::string path;
    std::size_t offset = 0;

    explicit Reader(const std::string& p)
        : in(p, std::ios::binary), path(p) {
        if (!in)
            throw FormatError("cannot open " + p);
    }

    std::uint32_t read_u32_be() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in)
            throw FormatError(path + ": truncated at byte offset " +
                              std::to_string(offset));
        offset += 4;
        return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
               (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
    }

    void read_bytes(std::vector<unsigned char>& buf) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size())
            throw FormatError(path + ": truncated at byte offset " +
                              std::to_string(offset + static_cast<std::size_t>(
                                                          in.gcount())));
        offset += buf.size();
    }
};

std::string file_crc(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    uLong crc = crc32(0L, Z_NULL, 0);
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(buf),
                    static_cast<uInt>(in.gcount()));
    }
    char out[16];
    std::snprintf(out, sizeof(out), "%08lx", static_cast<unsigned long>(crc));
    return out;
}

void write_u32_be(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

std::string to_string(PixelOrder order) {
    return order == PixelOrder::raster ? "raster" : "snake";
}

PixelOrder pixel_order_from_string(const std::string& s) {
    if (s == "raster") return PixelOrder::raster;
    if (s == "snake") return PixelOrder::snake;
    throw DomainError("unknown pixel order: " + s);
}

void Dataset::validate() const {
    if (pixels.size() != count() * pixel_count())
        throw DimensionError("dataset pixel buffer size mismatch");
    for (double v : pixels)
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("dataset pixel value outside [0,1]");
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
    Reader img(images_path);
    const std::uint32_t magic = img.read_u32_be();
    if (magic != kImageMagic)
        throw FormatError(images_path + ": bad image magic at offset 0 (got 0x" +
                          [&] {
                              char b[16];
                              std::snprintf(b, sizeof(b), "%08x", magic);
                              return std::string(b);
                          }() +
                          ", want 0x00000803)");
    const std::uint32_t n = img.read_u32_be();
    const std::uint32_t rows = img.read_u32_be();
    const std::uint32_t cols = img.read_u32_be();

    Reader lab(labels_path);
    const std::uint32_t lmagic = lab.read_u32_be();
    if (lmagic != kLabelMagic)
        throw FormatError(labels_path + ": bad label magic at offset 0");
    const std::uint32_t ln = lab.read_u32_be();
    if (ln != n)
        throw FormatError("image/label count mismatch: " + std::to_string(n) +
                          " images vs " + std::to_string(ln) + " labels");

    std::vector<unsigned char> ibytes(std::size_t{n} * rows * cols);
    img.read_bytes(ibytes);
    std::vector<unsigned char> lbytes(n);
    lab.read_bytes(lbytes);

    Dataset d;
    d.height = rows;
    d.width = cols;
    d.pixel_order = PixelOrder::raster;
    d.pixels.resize(ibytes.size());
    for (std::size_t i = 0; i < ibytes.size(); ++i)
        d.pixels[i] = static_cast<double>(ibytes[i]) / 255.0;
    d.labels.assign(lbytes.begin(), lbytes.end());
    d.provenance.push_back("images:" + images_path + ":crc32:" +
                           file_crc(images_path));
    d.provenance.push_back("labels:" + labels_path + ":crc32:" +
                           file_crc(labels_path));
    return d;
}

void write_idx(const Dataset& d, const std::string& images_path,
               const std::string& labels_path) {
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw FormatError("cannot write " + images_path);
    write_u32_be(img, kImageMagic);
    write_u32_be(img, static_cast<std::uint32_t>(d.count()));
    write_u32_be(img, static_cast<std::uint32_t>(d.height));
    write_u32_be(img, static_cast<std::uint32_t>(d.width));
    std::vector<unsigned char> bytes(d.pixels.size());
    for (std::size_t i = 0; i < d.pixels.size(); ++i)
        bytes[i] = static_cast<unsigned char>(
            std::lround(d.pixels[i] * 255.0));
    img.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError("cannot write " + labels_path);
    write_u32_be(lab, kLabelMagic);
    write_u32_be(lab, static_cast<std::uint32_t>(d.count()));
    for (int l : d.labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
}

Dataset preprocess(const Dataset& d, const PreprocessOptions& opts) {
    if (d.pixel_order != PixelOrder::raster)
        throw DomainError("preprocess expects raster-ordered input");
    const unsigned f = opts.downscale == 0 ? 1 : opts.downscale;
    if (d.height % f != 0 || d.width % f != 0)
        throw DomainError("downscale factor " + std::to_string(f) +
                          " does not divide " + std::to_string(d.height) + "x" +
                          std::to_string(d.width));

    Dataset out;
    out.height = d.height / f;
    out.width = d.width / f;
    out.labels = d.labels;
    out.provenance = d.provenance;
    out.pixel_order = opts.order;
    out.pixels.resize(d.count() * out.height * out.width);

    const double inv = 1.0 / (static_cast<double>(f) * f);
    for (std::size_t i = 0; i < d.count(); ++i) {
        const std::span<const double> src = d.image(i);
        double* dst = out.pixels.data() + i * out.pixel_count();
        for (std::size_t r = 0; r < out.height; ++r) {
            for (std::size_t c = 0; c < out.width; ++c) {
                double acc = 0.0;
                for (unsigned dr = 0; dr < f; ++dr)
                    for (unsigned dc = 0; dc < f; ++dc)
                        acc += src[(r * f + dr) * d.width + (c * f + dc)];
                double v = acc * inv;
                if (opts.binarize) v = v >= *opts.binarize ? 1.0 : 0.0;
                // Snake order reverses every odd row.
                const std::size_t cc =
                    (opts.order == PixelOrder::snake && r % 2 == 1)
                        ? out.width - 1 - c
                        : c;
                dst[r * out.width + cc] = v;
            }
        }
    }

    std::string chain = "preprocess:downscale=" + std::to_string(f);
    if (opts.binarize) chain += ",binarize=" + std::to_string(*opts.binarize);
    chain += ",order=" + to_string(opts.order);
    out.provenance.push_back(chain);
    return out;
}

} // namespace mpsr
