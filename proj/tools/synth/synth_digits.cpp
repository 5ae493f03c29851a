#include "synth_digits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace mpsr::synth {

namespace {

constexpr std::size_t kSide = 28;
constexpr double kPi = std::numbers::pi;

struct Point {
    double x, y;
};

using Polyline = std::vector<Point>;

// Glyphs live in a unit box, y pointing down.
Polyline arc(double cx, double cy, double rx, double ry, double deg0,
             double deg1, int samples = 40) {
    Polyline p;
    p.reserve(static_cast<std::size_t>(samples) + 1);
    for (int i = 0; i <= samples; ++i) {
        const double t =
            (deg0 + (deg1 - deg0) * i / samples) * kPi / 180.0;
        p.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
    }
    return p;
}

Polyline chain(std::initializer_list<Point> pts) { return Polyline(pts); }

std::vector<Polyline> glyph(int digit) {
    switch (digit) {
    case 0:
        return {arc(0.50, 0.50, 0.28, 0.40, 0, 360, 60)};
    case 1:
        return {chain({{0.34, 0.28}, {0.53, 0.09}, {0.53, 0.92}}),
                chain({{0.36, 0.92}, {0.68, 0.92}})};
    case 2:
        return {arc(0.48, 0.30, 0.26, 0.21, 180, 388),
                chain({{0.68, 0.42}, {0.22, 0.88}, {0.79, 0.88}})};
    case 3:
        return {arc(0.46, 0.30, 0.24, 0.20, 215, 455),
                arc(0.46, 0.68, 0.27, 0.23, 262, 500)};
    case 4:
        return {chain({{0.56, 0.08}, {0.17, 0.60}, {0.82, 0.60}}),
                chain({{0.60, 0.22}, {0.60, 0.92}})};
    case 5:
        return {chain({{0.74, 0.10}, {0.28, 0.10}, {0.25, 0.47}}),
                arc(0.45, 0.66, 0.27, 0.23, 250, 480)};
    case 6:
        return {chain({{0.63, 0.08}, {0.45, 0.32}, {0.33, 0.58}}),
                arc(0.49, 0.68, 0.21, 0.21, 0, 360, 50)};
    case 7:
        return {chain({{0.20, 0.12}, {0.79, 0.12}, {0.42, 0.90}})};
    case 8:
        return {arc(0.50, 0.29, 0.19, 0.17, 0, 360, 50),
                arc(0.50, 0.68, 0.24, 0.21, 0, 360, 50)};
    default:
        return {arc(0.48, 0.32, 0.21, 0.19, 0, 360, 50),
                chain({{0.69, 0.36}, {0.66, 0.62}, {0.54, 0.90}})};
    }
}

double segment_distance(Point p, Point a, Point b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double wx = p.x - a.x, wy = p.y - a.y;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

void render(int digit, std::mt19937_64& rng, double* out) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double sx = 0.85 + 0.25 * unif(rng);
    const double sy = 0.85 + 0.25 * unif(rng);
    const double shear = -0.18 + 0.36 * unif(rng);
    const double rot = -0.12 + 0.24 * unif(rng);
    const double tx = 14.0 + 3.6 * (unif(rng) - 0.5);
    const double ty = 14.0 + 3.6 * (unif(rng) - 0.5);
    const double width = 1.0 + 0.7 * unif(rng);
    const double bright = 0.85 + 0.15 * unif(rng);
    const double cr = std::cos(rot), sr = std::sin(rot);

    std::vector<Polyline> strokes = glyph(digit);
    for (Polyline& line : strokes)
        for (Point& p : line) {
            double x = (p.x - 0.5) * sx;
            double y = (p.y - 0.5) * sy;
            x += shear * y;
            const double rx = cr * x - sr * y;
            const double ry = sr * x + cr * y;
            p = {tx + 20.0 * rx, ty + 20.0 * ry};
        }

    for (std::size_t r = 0; r < kSide; ++r) {
        for (std::size_t c = 0; c < kSide; ++c) {
            const Point px{static_cast<double>(c), static_cast<double>(r)};
            double dist = 1e9;
            for (const Polyline& line : strokes)
                for (std::size_t i = 0; i + 1 < line.size(); ++i)
                    dist = std::min(dist,
                                    segment_distance(px, line[i], line[i + 1]));
            double v = std::clamp((width - dist) / 0.9, 0.0, 1.0) * bright;
            v += 0.04 * gauss(rng);
            v = std::clamp(v, 0.0, 1.0);
            // Quantize to the byte grid so IDX writes are lossless.
            out[r * kSide + c] = std::round(v * 255.0) / 255.0;
        }
    }
}

} // namespace

Dataset digits(std::size_t per_class, std::uint64_t seed) {
    Dataset d;
    d.height = kSide;
    d.width = kSide;
    d.pixel_order = PixelOrder::raster;
    d.pixels.resize(per_class * 10 * kSide * kSide);
    d.labels.resize(per_class * 10);
    d.provenance.push_back("synthetic-digits:seed=" + std::to_string(seed) +
                           ":per_class=" + std::to_string(per_class));

    std::mt19937_64 rng(seed);
    std::size_t idx = 0;
    // Interleave classes so any prefix of the set is roughly balanced.
    for (std::size_t i = 0; i < per_class; ++i) {
        for (int digit = 0; digit < 10; ++digit, ++idx) {
            d.labels[idx] = digit;
            render(digit, rng, d.pixels.data() + idx * kSide * kSide);
        }
    }
    return d;
}

} // namespace mpsr::synth
