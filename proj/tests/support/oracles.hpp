#pragma once

// Brute-force reference implementations used to check the library. These
// deliberately avoid the library's contraction and decomposition paths:
// plain loops, recursion from the opposite end, and Eigen's Jacobi SVD.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mpsr/feature_map.hpp"
#include "mpsr/mps.hpp"
#include "mpsr/tensor.hpp"

namespace oracle {

using mpsr::Complex;

// C = A * B via the naive triple loop.
inline std::vector<Complex> matmul(const std::vector<Complex>& a,
                                   const std::vector<Complex>& b,
                                   std::size_t n, std::size_t k,
                                   std::size_t m) {
    std::vector<Complex> c(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            Complex acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * m + j];
            c[i * m + j] = acc;
        }
    return c;
}

// Kronecker product of per-site vectors, first site slowest (row-major).
inline std::vector<Complex>
kron_chain(const std::vector<std::vector<Complex>>& factors) {
    std::vector<Complex> out{1.0};
    for (const auto& f : factors) {
        std::vector<Complex> next(out.size() * f.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = 0; j < f.size(); ++j)
                next[i * f.size() + j] = out[i] * f[j];
        out = std::move(next);
    }
    return out;
}

// Dense vector of an MPS contracted right to left (the library contracts the
// other way), scale included.
inline std::vector<Complex> dense_from_mps(const mpsr::MPS& m) {
    std::size_t right_dim = 1;
    std::vector<Complex> w{1.0}; // [chi_k x right_dim] row-major
    for (std::size_t k = m.site_count(); k-- > 0;) {
        const mpsr::DenseTensor& t = m.site(k);
        const std::size_t cl = t.extent(0), d = t.extent(1), cr = t.extent(2);
        std::vector<Complex> next(cl * d * right_dim, Complex{0.0});
        for (std::size_t a = 0; a < cl; ++a)
            for (std::size_t s = 0; s < d; ++s)
                for (std::size_t b = 0; b < cr; ++b) {
                    const Complex av = t.at({a, s, b});
                    if (av == Complex{0.0}) continue;
                    for (std::size_t r = 0; r < right_dim; ++r)
                        next[(a * d + s) * right_dim + r] +=
                            av * w[b * right_dim + r];
                }
        right_dim *= d;
        w = std::move(next);
    }
    const double scale = std::exp(m.log_scale());
    for (Complex& z : w) z *= scale;
    return w;
}

inline Complex dot(const std::vector<Complex>& a,
                   const std::vector<Complex>& b) {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

inline double norm(const std::vector<Complex>& a) {
    double acc = 0.0;
    for (const Complex& z : a) acc += std::norm(z);
    return std::sqrt(acc);
}

inline std::vector<double> born_distribution(const std::vector<Complex>& psi) {
    double total = 0.0;
    for (const Complex& z : psi) total += std::norm(z);
    std::vector<double> p(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) p[i] = std::norm(psi[i]) / total;
    return p;
}

inline double tv_distance(const std::vector<double>& p,
                          const std::vector<double>& q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return 0.5 * acc;
}

// Singular values of the dense state across a cut, via Jacobi SVD.
inline std::vector<double> schmidt_from_dense(const std::vector<Complex>& psi,
                                              std::size_t left_dim) {
    const std::size_t right_dim = psi.size() / left_dim;
    Eigen::MatrixXcd m(left_dim, right_dim);
    for (std::size_t i = 0; i < left_dim; ++i)
        for (std::size_t j = 0; j < right_dim; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                psi[i * right_dim + j];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    std::vector<double> s(svd.singularValues().data(),
                          svd.singularValues().data() +
                              svd.singularValues().size());
    return s;
}

// Composite Simpson on [a,b], independent of the library's quadrature.
template <typename F>
double simpson(F f, double a, double b, std::size_t intervals) {
    if (intervals % 2) ++intervals;
    const double h = (b - a) / static_cast<double>(intervals);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < intervals; ++i)
        acc += f(a + static_cast<double>(i) * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

inline std::vector<Complex> random_complex(std::size_t n,
                                           std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Complex> v(n);
    for (Complex& z : v) z = Complex{gauss(rng), gauss(rng)};
    return v;
}

// Random MPS with the given interior bond dimension (clamped near the
// boundaries), entries standard complex normal.
inline mpsr::MPS random_mps(std::size_t sites, std::size_t d, std::size_t chi,
                            std::mt19937_64& rng) {
    std::vector<mpsr::DenseTensor> ts;
    ts.reserve(sites);
    std::size_t left = 1;
    for (std::size_t k = 0; k < sites; ++k) {
        std::size_t right = 1;
        if (k + 1 < sites) {
            right = chi;
            std::size_t cap_l = 1, cap_r = 1;
            for (std::size_t i = 0; i <= k; ++i)
                cap_l = std::min(cap_l * d, chi + 1);
            for (std::size_t i = k + 1; i < sites; ++i)
                cap_r = std::min(cap_r * d, chi + 1);
            right = std::min({chi, cap_l, cap_r});
        }
        mpsr::DenseTensor t({left, d, right},
                            random_complex(left * d * right, rng));
        ts.push_back(std::move(t));
        left = right;
    }
    return mpsr::MPS(std::move(ts), 0.0, "");
}

inline std::vector<double> random_image(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) v = unif(rng);
    return x;
}

// Kolmogorov-Smirnov statistic of samples against an analytic CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = cdf(samples[i]);
        worst = std::max(worst, std::abs(c - static_cast<double>(i) / n));
        worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - c));
    }
    return worst;
}

} // namespace oracle
