#include "mpsr/mps.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Dense>

#include "mpsr/errors.hpp"

namespace mpsr {

namespace {

using Mat = Eigen::MatrixXcd;
using RM = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                         Eigen::RowMajor>;
using Index = Eigen::Index;

Eigen::Map<const RM, 0, Eigen::OuterStride<>> phys_slice(const DenseTensor& t,
                                                         std::size_t s) {
    const Shape& sh = t.shape();
    return {t.data() + s * sh[2], static_cast<Index>(sh[0]),
            static_cast<Index>(sh[2]),
            Eigen::OuterStride<>(static_cast<Index>(sh[1] * sh[2]))};
}

void set_phys_slice(DenseTensor& t, std::size_t s, const Mat& m) {
    const Shape& sh = t.shape();
    Eigen::Map<RM, 0, Eigen::OuterStride<>> dst(
        t.data() + s * sh[2], static_cast<Index>(sh[0]),
        static_cast<Index>(sh[2]),
        Eigen::OuterStride<>(static_cast<Index>(sh[1] * sh[2])));
    dst = m;
}

DenseTensor adjoint2(const DenseTensor& m) {
    const std::size_t perm[] = {1, 0};
    return m.transposed(perm).conjugated();
}

// LQ factorization: m = l * q with q having orthonormal rows.
std::pair<DenseTensor, DenseTensor> lq(const DenseTensor& m) {
    QrPair f = qr(adjoint2(m));
    return {adjoint2(f.r), adjoint2(f.q)};
}

void check_compatible(const MPS& a, const MPS& b, const char* op) {
    if (a.site_count() != b.site_count())
        throw DimensionError(std::string(op) + ": site counts differ (" +
                             std::to_string(a.site_count()) + " vs " +
                             std::to_string(b.site_count()) + ")");
    for (std::size_t k = 0; k < a.site_count(); ++k)
        if (a.site(k).extent(1) != b.site(k).extent(1))
            throw DimensionError(std::string(op) +
                                 ": physical dimension mismatch at site " +
                                 std::to_string(k));
}

double rescale_into_log(DenseTensor& t) {
    const double f = t.max_abs();
    if (f > 0.0) {
        t.scale(1.0 / f);
        return std::log(f);
    }
    return 0.0;
}

// Where the isometry frontier currently sits: every site left of it is a
// left isometry and every site right of it a right isometry. kNoCenter when
// the gauge is unknown.
constexpr std::size_t kNoCenter = static_cast<std::size_t>(-1);

std::size_t known_center(const MPS& m) {
    switch (m.canonical()) {
    case CanonicalForm::right:
        return 0;
    case CanonicalForm::left:
        return m.site_count() - 1;
    case CanonicalForm::mixed:
        return m.center();
    case CanonicalForm::none:
        break;
    }
    return kNoCenter;
}

} // namespace

LogComplex LogComplex::from(Complex z) {
    const double a = std::abs(z);
    if (a == 0.0) return {};
    return {std::log(a), z / a};
}

LogComplex LogComplex::operator*(const LogComplex& o) const {
    if (is_zero() || o.is_zero()) return {};
    return {log_mag + o.log_mag, phase * o.phase};
}

MPS::MPS(std::vector<DenseTensor> sites, double log_scale, std::string map_id)
    : sites_(std::move(sites)), log_scale_(log_scale),
      map_id_(std::move(map_id)) {}

std::size_t MPS::phys_dim() const {
    return sites_.empty() ? 0 : sites_.front().extent(1);
}

std::size_t MPS::bond_dim(std::size_t bond) const {
    if (bond > sites_.size()) throw DimensionError("bond index out of range");
    if (bond == 0) return sites_.front().extent(0);
    return sites_[bond - 1].extent(2);
}

std::size_t MPS::max_bond() const {
    std::size_t chi = 1;
    for (const DenseTensor& t : sites_) chi = std::max(chi, t.extent(2));
    return chi;
}

DenseTensor& MPS::site_mut(std::size_t k) {
    canonical_ = CanonicalForm::none;
    return sites_[k];
}

void MPS::set_canonical(CanonicalForm form, std::size_t center) {
    canonical_ = form;
    center_ = center;
}

void MPS::validate() const {
    if (sites_.empty()) throw DimensionError("MPS has no sites");
    if (!std::isfinite(log_scale_))
        throw NumericalError("MPS log_scale is not finite");
    if (sites_.front().extent(0) != 1 || sites_.back().extent(2) != 1)
        throw DimensionError("MPS boundary bonds must have extent 1");
    for (std::size_t k = 0; k < sites_.size(); ++k) {
        const DenseTensor& t = sites_[k];
        if (t.rank() != 3)
            throw DimensionError("MPS site " + std::to_string(k) +
                                 " is not rank 3");
        if (k + 1 < sites_.size() && t.extent(2) != sites_[k + 1].extent(0))
            throw DimensionError("MPS bond mismatch after site " +
                                 std::to_string(k));
        if (!t.all_finite())
            throw NumericalError("MPS site " + std::to_string(k) +
                                 " has non-finite entries");
    }
    auto iso_defect = [&](std::size_t k, bool right) {
        const DenseTensor& t = sites_[k];
        const Shape& sh = t.shape();
        Eigen::Map<const RM> m(t.data(),
                               static_cast<Index>(right ? sh[0] : sh[0] * sh[1]),
                               static_cast<Index>(right ? sh[1] * sh[2] : sh[2]));
        Mat g = right ? Mat(m * m.adjoint()) : Mat(m.adjoint() * m);
        return (g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
    };
    const double tol = 1e-10;
    if (canonical_ == CanonicalForm::right) {
        for (std::size_t k = 0; k < sites_.size(); ++k)
            if (iso_defect(k, true) > tol)
                throw ContractViolation("right-isometry violated at site " +
                                        std::to_string(k));
    } else if (canonical_ == CanonicalForm::left) {
        for (std::size_t k = 0; k < sites_.size(); ++k)
            if (iso_defect(k, false) > tol)
                throw ContractViolation("left-isometry violated at site " +
                                        std::to_string(k));
    } else if (canonical_ == CanonicalForm::mixed) {
        for (std::size_t k = 0; k < sites_.size(); ++k) {
            if (k < center_ && iso_defect(k, false) > tol)
                throw ContractViolation("left-isometry violated at site " +
                                        std::to_string(k));
            if (k > center_ && iso_defect(k, true) > tol)
                throw ContractViolation("right-isometry violated at site " +
                                        std::to_string(k));
        }
    }
}

MPS product_state(const LocalFeatureMap& map, std::span<const double> xs) {
    if (xs.empty()) throw DimensionError("product_state needs at least one site");
    const std::size_t d = map.dim();
    std::vector<DenseTensor> sites;
    sites.reserve(xs.size());
    for (double x : xs) {
        DenseTensor t({1, d, 1});
        map.evaluate_into(x, {t.data(), d});
        sites.push_back(std::move(t));
    }
    MPS out(std::move(sites), 0.0, map.id());
    if (map.claims_normalized()) out.set_canonical(CanonicalForm::right);
    return out;
}

MPS add(const MPS& a, const MPS& b) {
    check_compatible(a, b, "add");
    const std::size_t n = a.site_count();

    const bool a_big = a.log_scale() >= b.log_scale();
    const double delta = std::abs(a.log_scale() - b.log_scale());
    if (delta > 200.0) {
        std::cerr << "mpsr: add: dropping operand " << (a_big ? 2 : 1)
                  << ", its scale is " << delta
                  << " nats below the other operand\n";
        return a_big ? a : b;
    }
    // Rescales the smaller operand's first site so both operands share the
    // larger log_scale.
    const Complex small_factor = std::exp(-delta);

    std::vector<DenseTensor> sites;
    sites.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const DenseTensor& ta = a.site(k);
        const DenseTensor& tb = b.site(k);
        const std::size_t d = ta.extent(1);
        const std::size_t al = ta.extent(0), ar = ta.extent(2);
        const std::size_t bl = tb.extent(0), br = tb.extent(2);
        const Complex fa = (k == 0 && !a_big) ? small_factor : Complex{1.0};
        const Complex fb = (k == 0 && a_big) ? small_factor : Complex{1.0};

        if (n == 1) {
            DenseTensor t({1, d, 1});
            for (std::size_t s = 0; s < d; ++s)
                t.at({0, s, 0}) = fa * ta.at({0, s, 0}) + fb * tb.at({0, s, 0});
            sites.push_back(std::move(t));
            break;
        }

        const std::size_t nl = (k == 0) ? 1 : al + bl;
        const std::size_t nr = (k + 1 == n) ? 1 : ar + br;
        DenseTensor t({nl, d, nr});
        const std::size_t row_off = (k == 0) ? 0 : al;
        const std::size_t col_off = (k + 1 == n) ? 0 : ar;
        for (std::size_t s = 0; s < d; ++s) {
            for (std::size_t i = 0; i < al; ++i)
                for (std::size_t j = 0; j < ar; ++j)
                    t.at({i, s, j}) = fa * ta.at({i, s, j});
            for (std::size_t i = 0; i < bl; ++i)
                for (std::size_t j = 0; j < br; ++j)
                    t.at({row_off + i, s, col_off + j}) = fb * tb.at({i, s, j});
        }
        sites.push_back(std::move(t));
    }

    MPS out(std::move(sites), std::max(a.log_scale(), b.log_scale()),
            a.map_id() == b.map_id() ? a.map_id() : std::string{});
    return out;
}

namespace {

// QR site k into a left isometry, absorbing the triangular factor into the
// right neighbour.
void shift_center_right(MPS& m, std::size_t k, double& extra) {
    const Shape sh = m.site(k).shape();
    QrPair f = qr(m.site(k).reshaped({sh[0] * sh[1], sh[2]}));
    const std::size_t r = f.q.extent(1);
    m.site_mut(k) = f.q.reshaped({sh[0], sh[1], r});
    extra += rescale_into_log(f.r);
    m.site_mut(k + 1) = contract(f.r, m.site(k + 1), {{1, 0}});
}

// LQ site k into a right isometry, absorbing into the left neighbour.
void shift_center_left(MPS& m, std::size_t k, double& extra) {
    const Shape sh = m.site(k).shape();
    auto [l, q] = lq(m.site(k).reshaped({sh[0], sh[1] * sh[2]}));
    m.site_mut(k) = q.reshaped({q.extent(0), sh[1], sh[2]});
    extra += rescale_into_log(l);
    m.site_mut(k - 1) = contract(m.site(k - 1), l, {{2, 0}});
}

void normalize_site(MPS& m, std::size_t k, double& extra, CanonicalForm form,
                    std::size_t center) {
    DenseTensor& t = m.site_mut(k);
    const double norm = t.frobenius_norm();
    if (norm > 0.0) {
        t.scale(1.0 / norm);
        extra += std::log(norm);
        m.set_canonical(form, center);
    }
}

void canonicalize_right_inplace(MPS& m) {
    const std::size_t n = m.site_count();
    double extra = 0.0;
    std::size_t from = known_center(m);
    if (from == kNoCenter) from = n - 1;
    for (std::size_t k = from; k >= 1; --k) shift_center_left(m, k, extra);
    normalize_site(m, 0, extra, CanonicalForm::right, 0);
    m.set_log_scale(m.log_scale() + extra);
}

void canonicalize_left_inplace(MPS& m) {
    const std::size_t n = m.site_count();
    double extra = 0.0;
    std::size_t from = known_center(m);
    if (from == kNoCenter) from = 0;
    for (std::size_t k = from; k + 1 < n; ++k) shift_center_right(m, k, extra);
    normalize_site(m, n - 1, extra, CanonicalForm::left, n - 1);
    m.set_log_scale(m.log_scale() + extra);
}

void canonicalize_mixed_inplace(MPS& m, std::size_t center) {
    double extra = 0.0;
    std::size_t from = known_center(m);
    if (from == kNoCenter) {
        // No gauge information: make everything right-isometric first.
        for (std::size_t k = m.site_count() - 1; k >= 1; --k)
            shift_center_left(m, k, extra);
        from = 0;
    }
    for (std::size_t k = from; k < center; ++k) shift_center_right(m, k, extra);
    for (std::size_t k = from; k > center; --k) shift_center_left(m, k, extra);
    normalize_site(m, center, extra, CanonicalForm::mixed, center);
    m.set_log_scale(m.log_scale() + extra);
}

} // namespace

MPS canonicalized(const MPS& m, CanonicalForm form, std::size_t center) {
    if (m.site_count() == 0) throw DimensionError("empty MPS");
    MPS out = m;
    switch (form) {
    case CanonicalForm::right:
        if (m.canonical() != CanonicalForm::right)
            canonicalize_right_inplace(out);
        return out;
    case CanonicalForm::left:
        if (m.canonical() != CanonicalForm::left)
            canonicalize_left_inplace(out);
        return out;
    case CanonicalForm::mixed:
        if (center >= m.site_count())
            throw DimensionError("canonical center out of range");
        canonicalize_mixed_inplace(out, center);
        return out;
    case CanonicalForm::none:
        return out;
    }
    throw Error("unreachable");
}

double log_norm(const MPS& m) {
    return 0.5 * inner(m, m).log_mag;
}

Compressed compress_svd(const MPS& m, std::size_t chi_max, double eps_cut) {
    if (chi_max == 0) throw DomainError("chi_max must be positive");
    if (m.site_count() == 0) throw DimensionError("empty MPS");
    MPS out = m;
    const std::size_t n = out.site_count();
    double kept_product = 1.0;
    double extra = 0.0;

    if (n == 1) {
        normalize_site(out, 0, extra, CanonicalForm::right, 0);
        out.set_log_scale(out.log_scale() + extra);
        return {std::move(out), 0.0};
    }

    // The truncation sweep runs away from the side that is already
    // isometric, so a canonical input needs no extra canonicalization pass.
    std::size_t center = known_center(out);
    if (center != 0 && center != n - 1) {
        canonicalize_left_inplace(out);
        center = n - 1;
    }
    const bool right_to_left = center == n - 1;

    auto truncate_step = [&](std::size_t k) {
        const Shape sh = out.site(k).shape();
        if (right_to_left) {
            if (sh[0] <= chi_max && eps_cut == 0.0) {
                // Bond already small enough; just move the center along.
                shift_center_left(out, k, extra);
                return;
            }
            SvdResult f = svd(out.site(k).reshaped({sh[0], sh[1] * sh[2]}));
            TruncatedSvd t = truncate(f, chi_max, eps_cut);
            double total = 0.0;
            for (double v : f.s) total += v * v;
            const double kept = std::max(0.0, total - t.discarded_weight);
            const std::size_t keep = t.s.size();

            out.site_mut(k) = t.vh.reshaped({keep, sh[1], sh[2]});
            DenseTensor carry({sh[0], keep});
            if (kept > 0.0) {
                const double inv = 1.0 / std::sqrt(kept);
                for (std::size_t rr = 0; rr < sh[0]; ++rr)
                    for (std::size_t cc = 0; cc < keep; ++cc)
                        carry[rr * keep + cc] =
                            t.u[rr * keep + cc] * (t.s[cc] * inv);
                extra += 0.5 * std::log(kept);
                kept_product *= total > 0.0 ? kept / total : 1.0;
            }
            out.site_mut(k - 1) = contract(out.site(k - 1), carry, {{2, 0}});
        } else {
            if (sh[2] <= chi_max && eps_cut == 0.0) {
                shift_center_right(out, k, extra);
                return;
            }
            SvdResult f = svd(out.site(k).reshaped({sh[0] * sh[1], sh[2]}));
            TruncatedSvd t = truncate(f, chi_max, eps_cut);
            double total = 0.0;
            for (double v : f.s) total += v * v;
            const double kept = std::max(0.0, total - t.discarded_weight);
            const std::size_t keep = t.s.size();

            out.site_mut(k) = t.u.reshaped({sh[0], sh[1], keep});
            DenseTensor carry({keep, sh[2]});
            if (kept > 0.0) {
                const double inv = 1.0 / std::sqrt(kept);
                for (std::size_t rr = 0; rr < keep; ++rr)
                    for (std::size_t cc = 0; cc < sh[2]; ++cc)
                        carry[rr * sh[2] + cc] =
                            t.vh[rr * sh[2] + cc] * (t.s[rr] * inv);
                extra += 0.5 * std::log(kept);
                kept_product *= total > 0.0 ? kept / total : 1.0;
            }
            out.site_mut(k + 1) = contract(carry, out.site(k + 1), {{1, 0}});
        }
    };

    if (right_to_left) {
        for (std::size_t k = n; k-- > 1;) truncate_step(k);
        normalize_site(out, 0, extra, CanonicalForm::right, 0);
    } else {
        for (std::size_t k = 0; k + 1 < n; ++k) truncate_step(k);
        normalize_site(out, n - 1, extra, CanonicalForm::left, n - 1);
    }
    out.set_log_scale(out.log_scale() + extra);
    return {std::move(out), 1.0 - kept_product};
}

Compressed truncate_bond(const MPS& m, std::size_t cut, std::size_t chi_max,
                         double eps_cut) {
    const std::size_t n = m.site_count();
    if (cut < 1 || cut >= n) throw DimensionError("cut out of range");
    MPS out = canonicalized(m, CanonicalForm::mixed, cut - 1);
    const Shape sh = out.site(cut - 1).shape();
    SvdResult f = svd(out.site(cut - 1).reshaped({sh[0] * sh[1], sh[2]}));
    TruncatedSvd t = truncate(f, chi_max, eps_cut);
    double total = 0.0;
    for (double v : f.s) total += v * v;
    const double kept = std::max(0.0, total - t.discarded_weight);
    const std::size_t keep = t.s.size();

    out.site_mut(cut - 1) = t.u.reshaped({sh[0], sh[1], keep});
    DenseTensor carry({keep, sh[2]});
    double extra = 0.0;
    if (kept > 0.0) {
        const double inv = 1.0 / std::sqrt(kept);
        for (std::size_t rr = 0; rr < keep; ++rr)
            for (std::size_t c = 0; c < sh[2]; ++c)
                carry[rr * sh[2] + c] = t.vh[rr * sh[2] + c] * (t.s[rr] * inv);
        extra += 0.5 * std::log(kept);
    }
    out.site_mut(cut) = contract(carry, out.site(cut), {{1, 0}});
    out.set_log_scale(out.log_scale() + extra);
    out.set_canonical(CanonicalForm::mixed, cut);
    const double w = total > 0.0 ? t.discarded_weight / total : 0.0;
    return {std::move(out), w};
}

LogComplex inner(const MPS& a, const MPS& b) {
    check_compatible(a, b, "inner");
    const std::size_t n = a.site_count();
    Mat env = Mat::Ones(1, 1);
    double log_acc = a.log_scale() + b.log_scale();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t d = a.site(k).extent(1);
        Mat next = Mat::Zero(static_cast<Index>(a.site(k).extent(2)),
                             static_cast<Index>(b.site(k).extent(2)));
        for (std::size_t s = 0; s < d; ++s) {
            auto as = phys_slice(a.site(k), s);
            auto bs = phys_slice(b.site(k), s);
            next.noalias() += as.adjoint() * env * bs;
        }
        const double f = next.cwiseAbs().maxCoeff();
        if (f == 0.0) return {};
        next /= f;
        log_acc += std::log(f);
        env = std::move(next);
    }
    const Complex z = env(0, 0);
    const double az = std::abs(z);
    if (az == 0.0) return {};
    return {log_acc + std::log(az), z / az};
}

LogComplex amplitude(const MPS& m, const SpinConfig& config) {
    if (config.values.size() != m.site_count())
        throw DimensionError("config length does not match site count");
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    double log_acc = m.log_scale();
    for (std::size_t k = 0; k < m.site_count(); ++k) {
        const std::size_t s = config.values[k];
        if (s >= m.site(k).extent(1))
            throw DimensionError("config value out of range at site " +
                                 std::to_string(k));
        v = v * phys_slice(m.site(k), s);
        const double f = v.cwiseAbs().maxCoeff();
        if (f == 0.0) return {};
        v /= f;
        log_acc += std::log(f);
    }
    return LogComplex::from(v(0)) * LogComplex{log_acc, {1.0, 0.0}};
}

LogComplex amplitude_continuous(const MPS& m, const LocalFeatureMap& map,
                                std::span<const double> xs) {
    if (xs.size() != m.site_count())
        throw DimensionError("pixel count does not match site count");
    return inner(product_state(map, xs), m);
}

std::vector<double> schmidt_spectrum(const MPS& m, std::size_t cut) {
    const std::size_t n = m.site_count();
    if (cut < 1 || cut >= n)
        throw DimensionError("schmidt cut " + std::to_string(cut) +
                             " out of range [1," + std::to_string(n - 1) + "]");
    MPS mm = canonicalized(m, CanonicalForm::mixed, cut);
    const Shape sh = mm.site(cut).shape();
    SvdResult f = svd(mm.site(cut).reshaped({sh[0], sh[1] * sh[2]}));
    // Trim exact numerical zeros off the tail.
    std::vector<double>& s = f.s;
    const double floor = s.empty() ? 0.0 : 1e-14 * s.front();
    while (s.size() > 1 && s.back() <= floor) s.pop_back();
    return std::move(s);
}

SpinConfig sample(const MPS& m, std::mt19937_64& rng) {
    if (m.canonical() != CanonicalForm::right)
        throw ContractViolation("sample requires a right-canonical MPS");
    const double n0 = m.site(0).frobenius_norm();
    if (std::abs(n0 - 1.0) > 1e-6)
        throw ContractViolation("sample requires a unit-norm MPS");

    const std::size_t n = m.site_count();
    SpinConfig cfg;
    cfg.values.resize(n);
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Eigen::RowVectorXcd> branch;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t d = m.site(k).extent(1);
        branch.assign(d, {});
        double total = 0.0;
        for (std::size_t s = 0; s < d; ++s) {
            branch[s] = v * phys_slice(m.site(k), s);
            total += branch[s].squaredNorm();
        }
        const double u = unif(rng) * total;
        double acc = 0.0;
        std::size_t pick = d - 1;
        for (std::size_t s = 0; s < d; ++s) {
            acc += branch[s].squaredNorm();
            if (u < acc) {
                pick = s;
                break;
            }
        }
        cfg.values[k] = pick;
        const double bn = branch[pick].norm();
        if (bn > 0.0) v = branch[pick] / bn;
        else v = branch[pick];
    }
    return cfg;
}

std::vector<Complex> to_dense(const MPS& m) {
    constexpr std::size_t kCap = std::size_t{1} << 20;
    std::size_t dim = 1;
    for (std::size_t k = 0; k < m.site_count(); ++k) {
        dim *= m.site(k).extent(1);
        if (dim > kCap)
            throw CapacityError("to_dense: state dimension exceeds 2^20; "
                                "use amplitudes or overlaps instead");
    }
    RM acc = RM::Ones(1, 1);
    for (std::size_t k = 0; k < m.site_count(); ++k) {
        const Shape& sh = m.site(k).shape();
        Eigen::Map<const RM> site(m.site(k).data(),
                                  static_cast<Index>(sh[0]),
                                  static_cast<Index>(sh[1] * sh[2]));
        RM next = acc * site; // [p, d*chi_r] row-major
        acc = Eigen::Map<const RM>(next.data(),
                                   next.rows() * static_cast<Index>(sh[1]),
                                   static_cast<Index>(sh[2]));
    }
    const double scale = std::exp(m.log_scale());
    std::vector<Complex> out(static_cast<std::size_t>(acc.rows()));
    for (Index i = 0; i < acc.rows(); ++i) out[static_cast<std::size_t>(i)] = acc(i, 0) * scale;
    return out;
}

// ---------------------------------------------------------------------------
// Variational compression
// ---------------------------------------------------------------------------

namespace {

// Overlap environments between conj(out) and target, matrices indexed
// [out bond, target bond].
Mat transfer_from_left(const Mat& env, const DenseTensor& out_site,
                       const DenseTensor& t_site) {
    const std::size_t d = out_site.extent(1);
    Mat next = Mat::Zero(static_cast<Index>(out_site.extent(2)),
                         static_cast<Index>(t_site.extent(2)));
    for (std::size_t s = 0; s < d; ++s)
        next.noalias() += phys_slice(out_site, s).adjoint() * env *
                          phys_slice(t_site, s);
    return next;
}

Mat transfer_from_right(const Mat& env, const DenseTensor& out_site,
                        const DenseTensor& t_site) {
    const std::size_t d = out_site.extent(1);
    Mat next = Mat::Zero(static_cast<Index>(out_site.extent(0)),
                         static_cast<Index>(t_site.extent(0)));
    for (std::size_t s = 0; s < d; ++s)
        next.noalias() += phys_slice(out_site, s).conjugate() * env *
                          phys_slice(t_site, s).transpose();
    return next;
}

// Projection of the target onto the fixed environment at site k; the optimal
// one-site update is proportional to this tensor.
DenseTensor local_projection(const Mat& left, const DenseTensor& t_site,
                             const Mat& right) {
    const std::size_t d = t_site.extent(1);
    const std::size_t rows = static_cast<std::size_t>(left.rows());
    const std::size_t cols = static_cast<std::size_t>(right.rows());
    DenseTensor e({rows, d, cols});
    for (std::size_t s = 0; s < d; ++s) {
        Mat es = left * phys_slice(t_site, s) * right.transpose();
        set_phys_slice(e, s, es);
    }
    return e;
}

} // namespace

VariationalResult compress_variational(const MPS& target, MPS initial,
                                       int max_sweeps, double tol) {
    check_compatible(target, initial, "compress_variational");
    // Unit-normalize the target in whatever gauge is cheapest to reach; the
    // sweeps work in either.
    const CanonicalForm target_form =
        known_center(target) == target.site_count() - 1 ? CanonicalForm::left
                                                        : CanonicalForm::right;
    MPS t = canonicalized(target, target_form);
    const double target_log_norm = t.log_scale();
    t.set_log_scale(0.0);

    MPS out = canonicalized(std::move(initial), CanonicalForm::right);
    out.set_log_scale(0.0);

    const std::size_t n = t.site_count();
    VariationalResult res;

    if (n == 1) {
        // Single site: the target itself is the optimum.
        res.mps = t;
        res.mps.set_log_scale(target_log_norm);
        res.converged = true;
        res.fidelity_sq = 1.0;
        return res;
    }

    std::vector<Mat> ls(n + 1), rs(n + 1);
    rs[n] = Mat::Ones(1, 1);
    for (std::size_t k = n; k-- > 0;)
        rs[k] = transfer_from_right(rs[k + 1], out.site(k), t.site(k));
    ls[0] = Mat::Ones(1, 1);

    double fid = std::norm(rs[0](0, 0));
    double last_fid = fid;
    bool converged = false;
    int sweeps = 0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        // Left-to-right pass.
        for (std::size_t k = 0; k + 1 < n; ++k) {
            DenseTensor e = local_projection(ls[k], t.site(k), rs[k + 1]);
            const Shape sh = e.shape();
            QrPair f = qr(e.reshaped({sh[0] * sh[1], sh[2]}));
            out.site_mut(k) = f.q.reshaped({sh[0], sh[1], f.q.extent(1)});
            ls[k + 1] = transfer_from_left(ls[k], out.site(k), t.site(k));
        }
        // Right-to-left pass.
        for (std::size_t k = n; k-- > 1;) {
            DenseTensor e = local_projection(ls[k], t.site(k), rs[k + 1]);
            const Shape sh = e.shape();
            auto [l, q] = lq(e.reshaped({sh[0], sh[1] * sh[2]}));
            out.site_mut(k) = q.reshaped({q.extent(0), sh[1], sh[2]});
            rs[k] = transfer_from_right(rs[k + 1], out.site(k), t.site(k));
        }
        DenseTensor e0 = local_projection(ls[0], t.site(0), rs[1]);
        const double norm = e0.frobenius_norm();
        if (norm > 0.0) {
            e0.scale(1.0 / norm);
            out.site_mut(0) = std::move(e0);
        }
        fid = norm * norm;
        rs[0] = transfer_from_right(rs[1], out.site(0), t.site(0));
        ++sweeps;
        if (std::abs(fid - last_fid) < tol) {
            converged = true;
            break;
        }
        last_fid = fid;
    }

    out.set_canonical(CanonicalForm::right);
    out.set_log_scale(target_log_norm +
                      (fid > 0.0 ? 0.5 * std::log(fid) : 0.0));
    res.mps = std::move(out);
    res.converged = converged;
    res.sweeps_used = sweeps;
    res.fidelity_sq = fid;
    return res;
}

VariationalResult compress_variational(const MPS& target, std::size_t chi,
                                       int max_sweeps, double tol) {
    Compressed init = compress_svd(target, chi, 0.0);
    return compress_variational(target, std::move(init.mps), max_sweeps, tol);
}

} // namespace mpsr
