#pragma once

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpsr/tensor.hpp"

namespace mpsr {

/// A d-component complex function on [0,1] used to embed one pixel into a
/// local Hilbert space. All integrals over [0,1] use the measure density
/// w(x) = 2, the uniform choice under which the phased, indicator and
/// sin-basis maps are exactly orthonormal.
class LocalFeatureMap {
  public:
    using EvalFn = std::function<void(double, std::span<Complex>)>;

    static LocalFeatureMap cos_sin();
    static LocalFeatureMap phased();
    static LocalFeatureMap indicator();
    static LocalFeatureMap sin_basis(std::size_t n);
    /// Resolves "cos-sin" | "phased" | "indicator" | "sin-N".
    static LocalFeatureMap from_id(const std::string& id);

    const std::string& id() const { return id_; }
    std::size_t dim() const { return dim_; }
    bool claims_orthonormal() const { return orthonormal_; }
    bool claims_normalized() const { return normalized_; }
    double measure_density(double) const { return 2.0; }

    /// Segment boundaries inside [0,1] between which every component is
    /// constant; empty for smooth maps.
    const std::vector<double>& constant_segments() const { return segments_; }

    std::vector<Complex> evaluate(double x) const;
    void evaluate_into(double x, std::span<Complex> out) const;

  private:
    friend double sample_conditional(const LocalFeatureMap&, std::size_t,
                                     std::mt19937_64&);

    LocalFeatureMap(std::string id, std::size_t dim, EvalFn eval,
                    bool normalized, bool orthonormal,
                    std::vector<double> segments);

    struct CdfTables;
    const CdfTables& sampler_tables() const;

    std::string id_;
    std::size_t dim_ = 0;
    EvalFn eval_;
    bool normalized_ = false;
    bool orthonormal_ = false;
    std::vector<double> segments_;
    std::shared_ptr<CdfTables> tables_; // built lazily, shared across copies
};

/// Gram matrix G[s][s'] = integral of conj(phi^s) phi^s' w over [0,1],
/// via composite Simpson with at least `quadrature_points` subintervals.
/// Piecewise-constant maps are integrated segment-exactly instead.
DenseTensor gram(const LocalFeatureMap& map, std::size_t quadrature_points);

/// Projection of a delta spike at xi onto the map's basis, evaluated on the
/// grid xs: Psi(x) = sum_s phi^s(x) conj(phi^s(xi)).
std::vector<Complex> smooth_delta(const LocalFeatureMap& map, double xi,
                                  std::span<const double> xs);

/// Max over the grid of |sum_s |phi^s(x)|^2 - 1|.
double check_normalization(const LocalFeatureMap& map,
                           std::span<const double> xs);

/// Draws x in [0,1] with density |phi^s(x)|^2 w(x). Requires an orthonormal
/// map (otherwise the density does not integrate to one).
double sample_conditional(const LocalFeatureMap& map, std::size_t s,
                          std::mt19937_64& rng);

} // namespace mpsr
