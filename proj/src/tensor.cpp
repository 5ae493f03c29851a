#include "mpsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mpsr/errors.hpp"

namespace mpsr {

namespace {

using EMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using EMapRM = Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic,
                                              Eigen::Dynamic, Eigen::RowMajor>>;

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

EMatrix to_eigen(const DenseTensor& m) {
    if (m.rank() != 2)
        throw DimensionError("expected a rank-2 tensor, got rank " +
                             std::to_string(m.rank()));
    return EMapRM(m.data(), static_cast<Eigen::Index>(m.extent(0)),
                  static_cast<Eigen::Index>(m.extent(1)));
}

DenseTensor from_eigen(const EMatrix& e) {
    DenseTensor out({static_cast<std::size_t>(e.rows()),
                     static_cast<std::size_t>(e.cols())});
    Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>(out.data(), e.rows(), e.cols()) =
        e;
    return out;
}

} // namespace

DenseTensor::DenseTensor(Shape shape)
    : shape_(std::move(shape)), entries_(shape_size(shape_)) {}

DenseTensor::DenseTensor(Shape shape, std::vector<Complex> entries)
    : shape_(std::move(shape)), entries_(std::move(entries)) {
    if (entries_.size() != shape_size(shape_))
        throw DimensionError("entry count " + std::to_string(entries_.size()) +
                             " does not match shape " + shape_str(shape_));
}

DenseTensor DenseTensor::identity(std::size_t n) {
    DenseTensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) out.entries_[i * n + i] = 1.0;
    return out;
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> idx) const {
    if (idx.size() != shape_.size())
        throw DimensionError("index rank " + std::to_string(idx.size()) +
                             " does not match tensor rank " +
                             std::to_string(shape_.size()));
    std::size_t flat = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= shape_[k])
            throw DimensionError("index " + std::to_string(idx[k]) +
                                 " out of range for axis " + std::to_string(k) +
                                 " with extent " + std::to_string(shape_[k]));
        flat = flat * shape_[k] + idx[k];
    }
    return flat;
}

Complex& DenseTensor::at(std::initializer_list<std::size_t> idx) {
    return entries_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
}

const Complex& DenseTensor::at(std::initializer_list<std::size_t> idx) const {
    return entries_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
}

DenseTensor DenseTensor::reshaped(Shape new_shape) const {
    if (shape_size(new_shape) != entries_.size())
        throw DimensionError("reshape to " + shape_str(new_shape) +
                             " changes entry count");
    return DenseTensor(std::move(new_shape), entries_);
}

DenseTensor DenseTensor::transposed(std::span<const std::size_t> perm) const {
    if (perm.size() != shape_.size())
        throw DimensionError("permutation rank mismatch");
    std::vector<bool> seen(shape_.size(), false);
    Shape new_shape(shape_.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] >= shape_.size() || seen[perm[i]])
            throw DimensionError("invalid axis permutation");
        seen[perm[i]] = true;
        new_shape[i] = shape_[perm[i]];
    }
    DenseTensor out(new_shape);
    if (entries_.empty()) return out;

    const std::size_t r = shape_.size();
    std::vector<std::size_t> in_strides(r, 1);
    for (std::size_t k = r; k-- > 1;)
        in_strides[k - 1] = in_strides[k] * shape_[k];
    // stride of output axis i in the flat input array
    std::vector<std::size_t> strides(r);
    for (std::size_t i = 0; i < r; ++i) strides[i] = in_strides[perm[i]];

    std::vector<std::size_t> idx(r, 0);
    std::size_t src = 0;
    for (std::size_t dst = 0; dst < entries_.size(); ++dst) {
        out.entries_[dst] = entries_[src];
        for (std::size_t k = r; k-- > 0;) {
            if (++idx[k] < new_shape[k]) {
                src += strides[k];
                break;
            }
            src -= strides[k] * (new_shape[k] - 1);
            idx[k] = 0;
        }
    }
    return out;
}

DenseTensor DenseTensor::conjugated() const {
    DenseTensor out = *this;
    for (Complex& z : out.entries_) z = std::conj(z);
    return out;
}

double DenseTensor::frobenius_norm() const {
    double acc = 0.0;
    for (const Complex& z : entries_) acc += std::norm(z);
    return std::sqrt(acc);
}

double DenseTensor::max_abs() const {
    double acc = 0.0;
    for (const Complex& z : entries_) acc = std::max(acc, std::abs(z));
    return acc;
}

bool DenseTensor::all_finite() const {
    for (const Complex& z : entries_)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

void DenseTensor::scale(Complex factor) {
    for (Complex& z : entries_) z *= factor;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const AxisPair> axis_pairs) {
    std::vector<bool> a_paired(a.rank(), false), b_paired(b.rank(), false);
    for (const auto& [ia, ib] : axis_pairs) {
        if (ia >= a.rank() || ib >= b.rank())
            throw DimensionError("contract: axis pair (" + std::to_string(ia) +
                                 "," + std::to_string(ib) + ") out of range");
        if (a_paired[ia] || b_paired[ib])
            throw DimensionError("contract: axis paired twice in (" +
                                 std::to_string(ia) + "," + std::to_string(ib) +
                                 ")");
        if (a.extent(ia) != b.extent(ib))
            throw DimensionError(
                "contract: extent mismatch on axis pair (" + std::to_string(ia) +
                "," + std::to_string(ib) + "): " + std::to_string(a.extent(ia)) +
                " vs " + std::to_string(b.extent(ib)));
        a_paired[ia] = true;
        b_paired[ib] = true;
    }

    // Permute a to (free..., paired...) and b to (paired..., free...), then
    // multiply the two matricizations.
    std::vector<std::size_t> a_perm, b_perm;
    Shape out_shape;
    std::size_t free_a = 1, free_b = 1, paired = 1;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (!a_paired[i]) {
            a_perm.push_back(i);
            out_shape.push_back(a.extent(i));
            free_a *= a.extent(i);
        }
    for (const auto& [ia, ib] : axis_pairs) {
        a_perm.push_back(ia);
        paired *= a.extent(ia);
    }
    for (const auto& [ia, ib] : axis_pairs) b_perm.push_back(ib);
    for (std::size_t i = 0; i < b.rank(); ++i)
        if (!b_paired[i]) {
            b_perm.push_back(i);
            out_shape.push_back(b.extent(i));
            free_b *= b.extent(i);
        }

    DenseTensor ap = a.transposed(a_perm);
    DenseTensor bp = b.transposed(b_perm);

    using RM = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
    Eigen::Map<const RM> ma(ap.data(), static_cast<Eigen::Index>(free_a),
                            static_cast<Eigen::Index>(paired));
    Eigen::Map<const RM> mb(bp.data(), static_cast<Eigen::Index>(paired),
                            static_cast<Eigen::Index>(free_b));
    DenseTensor out(out_shape);
    Eigen::Map<RM> mo(out.data(), static_cast<Eigen::Index>(free_a),
                      static_cast<Eigen::Index>(free_b));
    mo.noalias() = ma * mb;
    return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<AxisPair> axis_pairs) {
    return contract(a, b,
                    std::span<const AxisPair>(axis_pairs.begin(),
                                              axis_pairs.size()));
}

SvdResult svd(const DenseTensor& m) {
    EMatrix mat = to_eigen(m);
    const Eigen::Index rows = mat.rows(), cols = mat.cols();

    // Tall or wide inputs go through a QR step first so the iterative part
    // always runs on a roughly square matrix.
    if (rows > cols + cols / 4) {
        QrPair f = qr(m);
        SvdResult inner = svd(f.r);
        EMatrix u = to_eigen(f.q) * to_eigen(inner.u);
        return {from_eigen(u), std::move(inner.s), std::move(inner.vh)};
    }
    if (cols > rows + rows / 4) {
        SvdResult t = svd(from_eigen(mat.adjoint()));
        EMatrix u = to_eigen(t.vh).adjoint();
        EMatrix vh = to_eigen(t.u).adjoint();
        return {from_eigen(u), std::move(t.s), from_eigen(vh)};
    }

    Eigen::BDCSVD<EMatrix> solver(mat,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success)
        throw NumericalError("SVD did not converge on a " +
                             std::to_string(rows) + "x" + std::to_string(cols) +
                             " matrix");
    SvdResult out;
    out.u = from_eigen(solver.matrixU());
    out.vh = from_eigen(solver.matrixV().adjoint().eval());
    const auto& sv = solver.singularValues();
    out.s.assign(sv.data(), sv.data() + sv.size());
    return out;
}

TruncatedSvd truncate(const SvdResult& f, std::size_t chi_max, double eps_cut) {
    const std::size_t n = f.s.size();
    if (n == 0) throw DimensionError("truncate: empty singular spectrum");

    double total = 0.0;
    for (double v : f.s) total += v * v;

    // Values below 1e-14 * max are numerical noise; never let them define the
    // rank.
    const double floor = 1e-14 * f.s.front();
    std::size_t rank = 1;
    while (rank < n && f.s[rank] > floor && f.s[rank] > 0.0) ++rank;
    if (f.s.front() <= 0.0) rank = 1;

    // Smallest k whose discarded tail is within eps_cut * total.
    std::size_t keep = rank;
    double tail = 0.0;
    for (std::size_t k = rank; k-- > 1;) {
        tail += f.s[k] * f.s[k];
        if (tail > eps_cut * total) break;
        keep = k;
    }
    keep = std::max<std::size_t>(1, std::min(keep, chi_max));

    double kept = 0.0;
    for (std::size_t i = 0; i < keep; ++i) kept += f.s[i] * f.s[i];

    TruncatedSvd out;
    out.s.assign(f.s.begin(), f.s.begin() + static_cast<std::ptrdiff_t>(keep));
    out.discarded_weight = std::max(0.0, total - kept);

    const std::size_t rows = f.u.extent(0), cols = f.vh.extent(1);
    DenseTensor u({rows, keep});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < keep; ++c)
            u[r * keep + c] = f.u[r * n + c];
    DenseTensor vh({keep, cols});
    std::copy(f.vh.data(), f.vh.data() + keep * cols, vh.data());
    out.u = std::move(u);
    out.vh = std::move(vh);
    return out;
}

QrPair qr(const DenseTensor& m) {
    EMatrix mat = to_eigen(m);
    const Eigen::Index rows = mat.rows(), cols = mat.cols();
    const Eigen::Index k = std::min(rows, cols);
    Eigen::HouseholderQR<EMatrix> solver(mat);
    EMatrix q = solver.householderQ() * EMatrix::Identity(rows, k);
    EMatrix r = solver.matrixQR()
                    .topRows(k)
                    .template triangularView<Eigen::Upper>();
    // Gauge fix: real nonnegative diagonal of R, so the factorization is
    // unique and repeated runs produce identical bytes.
    for (Eigen::Index i = 0; i < k; ++i) {
        const Complex d = r(i, i);
        const double a = std::abs(d);
        if (a > 0.0) {
            const Complex phase = d / a;
            r.row(i) *= std::conj(phase);
            q.col(i) *= phase;
        }
    }
    return {from_eigen(q), from_eigen(r)};
}

} // namespace mpsr
