#include "mpsr/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "mpsr/errors.hpp"

namespace mpsr {

namespace {

constexpr char kMagic[4] = {'M', 'P', 'S', 'M'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i32(std::string& buf, std::int32_t v) {
    put_u32(buf, static_cast<std::uint32_t>(v));
}

void put_f64(std::string& buf, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void put_str(std::string& buf, const std::string& s) {
    put_u32(buf, static_cast<std::uint32_t>(s.size()));
    buf.append(s);
}

struct Cursor {
    const unsigned char* p;
    std::size_t left;
    const std::string& path;

    void need(std::size_t n) {
        if (left < n)
            throw FormatError(path + ": truncated model payload");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        left -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
        p += 8;
        left -= 8;
        return std::bit_cast<double>(v);
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        left -= n;
        return s;
    }
};

} // namespace

void save_model(const ModelSet& set, const std::string& path) {
    set.validate();

    std::string payload;
    put_str(payload, set.models.front().map_id);
    put_u32(payload, static_cast<std::uint32_t>(set.models.front().chi));
    payload.push_back(
        static_cast<char>(set.models.front().pixel_order == PixelOrder::snake
                              ? 1
                              : 0));
    put_u32(payload, static_cast<std::uint32_t>(set.height));
    put_u32(payload, static_cast<std::uint32_t>(set.width));
    put_u32(payload, static_cast<std::uint32_t>(set.models.size()));
    for (const ClassModel& m : set.models) {
        put_i32(payload, m.label);
        put_f64(payload, m.log_cnorm);
        put_u32(payload, static_cast<std::uint32_t>(m.state.site_count()));
        for (std::size_t k = 0; k < m.state.site_count(); ++k) {
            const DenseTensor& t = m.state.site(k);
            put_u32(payload, static_cast<std::uint32_t>(t.extent(0)));
            put_u32(payload, static_cast<std::uint32_t>(t.extent(1)));
            put_u32(payload, static_cast<std::uint32_t>(t.extent(2)));
            for (const Complex& z : t.entries()) {
                put_f64(payload, z.real());
                put_f64(payload, z.imag());
            }
        }
    }

    const uLong crc =
        crc32(crc32(0L, Z_NULL, 0),
              reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out.write(kMagic, 4);
    std::string head;
    put_u16(head, kVersion);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    std::string tail;
    put_u32(tail, static_cast<std::uint32_t>(crc));
    out.write(tail.data(), static_cast<std::streamsize>(tail.size()));
    if (!out) throw FormatError("write failed for " + path);
}

ModelSet load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (bytes.size() < 10) throw FormatError(path + ": file too short");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(path + ": bad magic, not a model file");
    const std::uint16_t version = static_cast<std::uint16_t>(
        static_cast<unsigned char>(bytes[4]) |
        (static_cast<unsigned char>(bytes[5]) << 8));
    if (version != kVersion)
        throw FormatError(path + ": unsupported format version " +
                          std::to_string(version));

    const std::size_t payload_size = bytes.size() - 10;
    const unsigned char* payload =
        reinterpret_cast<const unsigned char*>(bytes.data()) + 6;
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i)
        stored_crc |= std::uint32_t(static_cast<unsigned char>(
                          bytes[bytes.size() - 4 + static_cast<std::size_t>(i)]))
                      << (8 * i);
    const uLong crc = crc32(crc32(0L, Z_NULL, 0), payload,
                            static_cast<uInt>(payload_size));
    if (static_cast<std::uint32_t>(crc) != stored_crc)
        throw FormatError(path + ": checksum mismatch, file is corrupted");

    Cursor cur{payload, payload_size, path};
    ModelSet set;
    const std::string map_id = cur.str();
    const std::uint32_t chi = cur.u32();
    cur.need(1);
    const PixelOrder order =
        *cur.p ? PixelOrder::snake : PixelOrder::raster;
    ++cur.p;
    --cur.left;
    set.height = cur.u32();
    set.width = cur.u32();
    const std::uint32_t count = cur.u32();
    set.models.reserve(count);
    for (std::uint32_t mi = 0; mi < count; ++mi) {
        ClassModel m;
        m.label = cur.i32();
        m.log_cnorm = cur.f64();
        m.map_id = map_id;
        m.chi = chi;
        m.pixel_order = order;
        const std::uint32_t sites = cur.u32();
        std::vector<DenseTensor> tensors;
        tensors.reserve(sites);
        for (std::uint32_t k = 0; k < sites; ++k) {
            const std::size_t cl = cur.u32();
            const std::size_t d = cur.u32();
            const std::size_t cr = cur.u32();
            DenseTensor t({cl, d, cr});
            for (std::size_t e = 0; e < t.size(); ++e) {
                const double re = cur.f64();
                const double im = cur.f64();
                t[e] = Complex{re, im};
            }
            tensors.push_back(std::move(t));
        }
        m.state = MPS(std::move(tensors), 0.0, map_id);
        set.models.push_back(std::move(m));
    }
    if (cur.left != 0)
        throw FormatError(path + ": trailing bytes after model payload");
    set.validate();
    return set;
}

void export_metrics(std::span<const MetricRecord> records,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << "chi,strategy,map_id,accuracy,mean_sq_overlap,wall_time_s\n";
    char line[256];
    for (const MetricRecord& r : records) {
        std::snprintf(line, sizeof(line), "%zu,%s,%s,%.10g,%.10g,%.10g\n",
                      r.chi, r.strategy.c_str(), r.map_id.c_str(), r.accuracy,
                      r.mean_sq_overlap, r.wall_time_s);
        out << line;
    }
    if (!out) throw FormatError("write failed for " + path);
}

void export_image_pgm(std::span<const double> pixels, std::size_t height,
                      std::size_t width, const std::string& path) {
    if (pixels.size() != height * width)
        throw DimensionError("pixel count does not match image shape");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    for (double v : pixels) {
        const double clamped = std::min(1.0, std::max(0.0, v));
        const unsigned char b =
            static_cast<unsigned char>(std::lround(clamped * 255.0));
        out.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!out) throw FormatError("write failed for " + path);
}

void export_image_pbm(std::span<const std::size_t> bits, std::size_t height,
                      std::size_t width, const std::string& path) {
    if (bits.size() != height * width)
        throw DimensionError("pixel count does not match image shape");
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << "P1\n" << width << " " << height << "\n";
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            out << (bits[r * width + c] ? '1' : '0');
            out << (c + 1 == width ? '\n' : ' ');
        }
    }
    if (!out) throw FormatError("write failed for " + path);
}

void export_curve(std::span<const double> xs, std::span<const Complex> values,
                  const std::string& path) {
    if (xs.size() != values.size())
        throw DimensionError("curve arrays differ in length");
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << "x,re,im,abs\n";
    char line[160];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.10g\n", xs[i],
                      values[i].real(), values[i].imag(),
                      std::abs(values[i]));
        out << line;
    }
    if (!out) throw FormatError("write failed for " + path);
}

} // namespace mpsr
