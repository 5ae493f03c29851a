#include "mpsr/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "mpsr/errors.hpp"

namespace mpsr {

namespace {

constexpr double kPi = std::numbers::pi;

void check_domain(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("feature map input " + std::to_string(x) +
                          " outside [0,1]");
}

} // namespace

struct LocalFeatureMap::CdfTables {
    static constexpr std::size_t kKnots = 4096;
    std::once_flag built;
    // cdf[s][i] = integral of |phi^s|^2 w over [0, i/kKnots], scaled to end
    // at exactly 1; total[s] is the unscaled endpoint.
    std::vector<std::vector<double>> cdf;
    std::vector<double> total;
};

LocalFeatureMap::LocalFeatureMap(std::string id, std::size_t dim, EvalFn eval,
                                 bool normalized, bool orthonormal,
                                 std::vector<double> segments)
    : id_(std::move(id)), dim_(dim), eval_(std::move(eval)),
      normalized_(normalized), orthonormal_(orthonormal),
      segments_(std::move(segments)), tables_(std::make_shared<CdfTables>()) {}

LocalFeatureMap LocalFeatureMap::cos_sin() {
    return LocalFeatureMap(
        "cos-sin", 2,
        [](double x, std::span<Complex> out) {
            out[0] = std::cos(kPi / 2.0 * x);
            out[1] = std::sin(kPi / 2.0 * x);
        },
        /*normalized=*/true, /*orthonormal=*/false, {});
}

LocalFeatureMap LocalFeatureMap::phased() {
    return LocalFeatureMap(
        "phased", 2,
        [](double x, std::span<Complex> out) {
            const Complex up = std::polar(1.0, 1.5 * kPi * x);
            out[0] = up * std::cos(kPi / 2.0 * x);
            out[1] = std::conj(up) * std::sin(kPi / 2.0 * x);
        },
        /*normalized=*/true, /*orthonormal=*/true, {});
}

LocalFeatureMap LocalFeatureMap::indicator() {
    return LocalFeatureMap(
        "indicator", 2,
        [](double x, std::span<Complex> out) {
            out[0] = x < 0.5 ? 1.0 : 0.0;
            out[1] = x < 0.5 ? 0.0 : 1.0;
        },
        /*normalized=*/true, /*orthonormal=*/true, {0.0, 0.5, 1.0});
}

LocalFeatureMap LocalFeatureMap::sin_basis(std::size_t n) {
    if (n == 0) throw DomainError("sin basis needs at least one component");
    return LocalFeatureMap(
        "sin-" + std::to_string(n), n,
        [n](double x, std::span<Complex> out) {
            for (std::size_t k = 0; k < n; ++k)
                out[k] = std::sin(static_cast<double>(k + 1) * kPi * x);
        },
        /*normalized=*/false, /*orthonormal=*/true, {});
}

LocalFeatureMap LocalFeatureMap::from_id(const std::string& id) {
    if (id == "cos-sin") return cos_sin();
    if (id == "phased") return phased();
    if (id == "indicator") return indicator();
    if (id.rfind("sin-", 0) == 0) {
        const std::string tail = id.substr(4);
        std::size_t pos = 0;
        unsigned long n = 0;
        try {
            n = std::stoul(tail, &pos);
        } catch (const std::exception&) {
            throw DomainError("unknown feature map id: " + id);
        }
        if (pos != tail.size() || n == 0)
            throw DomainError("unknown feature map id: " + id);
        return sin_basis(n);
    }
    throw DomainError("unknown feature map id: " + id);
}

std::vector<Complex> LocalFeatureMap::evaluate(double x) const {
    std::vector<Complex> out(dim_);
    evaluate_into(x, out);
    return out;
}

void LocalFeatureMap::evaluate_into(double x, std::span<Complex> out) const {
    check_domain(x);
    if (out.size() != dim_)
        throw DimensionError("feature map output span has wrong length");
    eval_(x, out);
}

DenseTensor gram(const LocalFeatureMap& map, std::size_t quadrature_points) {
    if (quadrature_points < 64)
        throw DomainError("gram needs at least 64 quadrature points");
    const std::size_t d = map.dim();
    DenseTensor g({d, d});
    std::vector<Complex> phi(d);

    const auto& segs = map.constant_segments();
    if (!segs.empty()) {
        // Constant between breakpoints: one midpoint evaluation per segment
        // integrates exactly.
        for (std::size_t seg = 0; seg + 1 < segs.size(); ++seg) {
            const double len = segs[seg + 1] - segs[seg];
            const double mid = 0.5 * (segs[seg] + segs[seg + 1]);
            map.evaluate_into(mid, phi);
            const double wseg = len * map.measure_density(mid);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b)
                    g[a * d + b] += wseg * std::conj(phi[a]) * phi[b];
        }
        return g;
    }

    std::size_t n = quadrature_points + (quadrature_points % 2);
    const double h = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) * h;
        double coef = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        coef *= h / 3.0 * map.measure_density(x);
        map.evaluate_into(x, phi);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                g[a * d + b] += coef * std::conj(phi[a]) * phi[b];
    }
    return g;
}

std::vector<Complex> smooth_delta(const LocalFeatureMap& map, double xi,
                                  std::span<const double> xs) {
    check_domain(xi);
    const std::size_t d = map.dim();
    std::vector<Complex> at_xi = map.evaluate(xi);
    std::vector<Complex> phi(d);
    std::vector<Complex> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        map.evaluate_into(xs[i], phi);
        Complex acc = 0.0;
        for (std::size_t s = 0; s < d; ++s) acc += phi[s] * std::conj(at_xi[s]);
        out[i] = acc;
    }
    return out;
}

double check_normalization(const LocalFeatureMap& map,
                           std::span<const double> xs) {
    std::vector<Complex> phi(map.dim());
    double worst = 0.0;
    for (double x : xs) {
        map.evaluate_into(x, phi);
        double p = 0.0;
        for (const Complex& z : phi) p += std::norm(z);
        worst = std::max(worst, std::abs(p - 1.0));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Conditional pixel sampling via inverse CDF
// ---------------------------------------------------------------------------

const LocalFeatureMap::CdfTables& LocalFeatureMap::sampler_tables() const {
    std::call_once(tables_->built, [this] {
        const std::size_t n = CdfTables::kKnots;
        const double h = 1.0 / static_cast<double>(n);
        const bool piecewise = !segments_.empty();
        std::vector<Complex> phi(dim_);
        auto density = [&](std::size_t s, double x) {
            eval_(x, phi);
            return std::norm(phi[s]) * measure_density(x);
        };
        tables_->cdf.assign(dim_, std::vector<double>(n + 1, 0.0));
        tables_->total.assign(dim_, 1.0);
        for (std::size_t s = 0; s < dim_; ++s) {
            auto& c = tables_->cdf[s];
            for (std::size_t i = 0; i < n; ++i) {
                const double a = static_cast<double>(i) * h;
                const double m = a + 0.5 * h;
                double piece;
                if (piecewise) {
                    piece = h * density(s, m); // exact for constants
                } else {
                    piece = h / 6.0 *
                            (density(s, a) + 4.0 * density(s, m) +
                             density(s, a + h));
                }
                c[i + 1] = c[i] + piece;
            }
            // For an orthonormal map c[n] is 1 up to quadrature error; scale
            // it out so the inverse is defined on all of (0,1).
            const double total = c[n];
            if (total > 0.0) {
                tables_->total[s] = total;
                for (double& v : c) v /= total;
            }
        }
    });
    return *tables_;
}

double sample_conditional(const LocalFeatureMap& map, std::size_t s,
                          std::mt19937_64& rng) {
    if (!map.claims_orthonormal())
        throw ContractViolation("sample_conditional requires an orthonormal "
                                "feature map; '" +
                                map.id() + "' is not");
    if (s >= map.dim())
        throw DimensionError("component index out of range");

    const auto& tables = map.sampler_tables();
    const auto& c = tables.cdf[s];
    const std::size_t n = LocalFeatureMap::CdfTables::kKnots;
    const double h = 1.0 / static_cast<double>(n);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);

    // Bracketing knot interval, then bisection on the locally integrated CDF.
    const auto it = std::upper_bound(c.begin(), c.end(), u);
    std::size_t i = it == c.begin()
                        ? 0
                        : static_cast<std::size_t>(it - c.begin()) - 1;
    i = std::min(i, n - 1);

    std::vector<Complex> phi(map.dim());
    auto density = [&](double x) {
        map.evaluate_into(x, phi);
        return std::norm(phi[s]) * map.measure_density(x);
    };
    const double x0 = static_cast<double>(i) * h;
    const double scale = 1.0 / tables.total[s];
    const bool piecewise = !map.constant_segments().empty();
    auto local_cdf = [&](double x) {
        const double m = 0.5 * (x0 + x);
        if (piecewise) return c[i] + scale * (x - x0) * density(m);
        return c[i] + scale * (x - x0) / 6.0 *
                          (density(x0) + 4.0 * density(m) + density(x));
    };

    double lo = x0, hi = x0 + h;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (local_cdf(mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace mpsr
