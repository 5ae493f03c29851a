#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mpsr {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

/// Dense complex tensor, entries stored row-major (last index fastest).
/// The row-major layout is fixed so serialized tensors are bit-comparable
/// across runs.
class DenseTensor {
  public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape); // zero-initialized
    DenseTensor(Shape shape, std::vector<Complex> entries);

    static DenseTensor identity(std::size_t n);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return entries_.size(); }

    Complex& operator[](std::size_t flat) { return entries_[flat]; }
    const Complex& operator[](std::size_t flat) const { return entries_[flat]; }

    Complex& at(std::initializer_list<std::size_t> idx);
    const Complex& at(std::initializer_list<std::size_t> idx) const;

    Complex* data() { return entries_.data(); }
    const Complex* data() const { return entries_.data(); }
    std::span<const Complex> entries() const { return entries_; }

    /// Same entries, new shape; total size must match.
    DenseTensor reshaped(Shape new_shape) const;
    /// Axis permutation: result axis i is input axis perm[i].
    DenseTensor transposed(std::span<const std::size_t> perm) const;
    DenseTensor conjugated() const;

    double frobenius_norm() const;
    double max_abs() const;
    bool all_finite() const;
    void scale(Complex factor);

  private:
    std::size_t flat_index(std::span<const std::size_t> idx) const;

    Shape shape_;
    std::vector<Complex> entries_;
};

using AxisPair = std::pair<std::size_t, std::size_t>;

/// Sum over the paired axes of a and b. The result carries the unpaired axes
/// of a followed by the unpaired axes of b. Pairing an axis twice or pairing
/// axes of unequal extent raises DimensionError.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const AxisPair> axis_pairs);
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<AxisPair> axis_pairs);

struct SvdResult {
    DenseTensor u;         // orthonormal columns
    std::vector<double> s; // nonincreasing, nonnegative
    DenseTensor vh;        // orthonormal rows
};

/// Thin SVD of a rank-2 tensor: u * diag(s) * vh reconstructs the input to
/// 1e-12 relative Frobenius error.
SvdResult svd(const DenseTensor& m);

struct TruncatedSvd {
    DenseTensor u;
    std::vector<double> s;
    DenseTensor vh;
    double discarded_weight = 0.0; // sum of squared dropped singular values
};

/// Keeps k = min(chi_max, smallest k whose trailing squared singular values
/// sum to at most eps_cut * total) leading singular triples, never fewer than
/// one. Values below 1e-14 * s.front() count as numerical zeros and are
/// dropped regardless (their weight is still reported).
TruncatedSvd truncate(const SvdResult& f, std::size_t chi_max, double eps_cut);

struct QrPair {
    DenseTensor q; // orthonormal columns
    DenseTensor r; // upper triangular
};

QrPair qr(const DenseTensor& m);

} // namespace mpsr
