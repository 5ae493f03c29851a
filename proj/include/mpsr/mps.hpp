#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpsr/feature_map.hpp"
#include "mpsr/tensor.hpp"

namespace mpsr {

/// Complex number carried as log-magnitude plus unit phase, so overlaps and
/// amplitudes of hundreds of sites never leave double range.
struct LogComplex {
    double log_mag = -std::numeric_limits<double>::infinity();
    Complex phase{1.0, 0.0};

    static LogComplex from(Complex z);
    bool is_zero() const { return log_mag == -std::numeric_limits<double>::infinity(); }
    Complex value() const { return is_zero() ? Complex{0.0, 0.0} : std::exp(log_mag) * phase; }
    LogComplex operator*(const LogComplex& o) const;
};

enum class CanonicalForm : std::uint8_t { none, left, right, mixed };

struct SpinConfig {
    std::vector<std::size_t> values;
};

/// Matrix product state: a chain of [chi_left, d, chi_right] tensors with an
/// explicit log-scale, so the represented state is exp(log_scale) times the
/// contraction of the chain. Boundary bonds have extent 1.
class MPS {
  public:
    MPS() = default;
    MPS(std::vector<DenseTensor> sites, double log_scale = 0.0,
        std::string map_id = {});

    std::size_t site_count() const { return sites_.size(); }
    std::size_t phys_dim() const;
    /// Bond k sits left of site k; k ranges over [0, site_count()].
    std::size_t bond_dim(std::size_t bond) const;
    std::size_t max_bond() const;

    const DenseTensor& site(std::size_t k) const { return sites_[k]; }
    DenseTensor& site_mut(std::size_t k);
    const std::vector<DenseTensor>& sites() const { return sites_; }

    double log_scale() const { return log_scale_; }
    void set_log_scale(double v) { log_scale_ = v; }

    CanonicalForm canonical() const { return canonical_; }
    std::size_t center() const { return center_; }
    void set_canonical(CanonicalForm form, std::size_t center = 0);

    const std::string& map_id() const { return map_id_; }
    void set_map_id(std::string id) { map_id_ = std::move(id); }

    /// Checks bond consistency, finiteness and (when claimed) isometry
    /// conditions; throws on violation.
    void validate() const;

  private:
    std::vector<DenseTensor> sites_;
    double log_scale_ = 0.0;
    CanonicalForm canonical_ = CanonicalForm::none;
    std::size_t center_ = 0;
    std::string map_id_;
};

/// chi = 1 encoding of one image: amplitude at s is the product of
/// phi^{s_k}(x_k) over sites.
MPS product_state(const LocalFeatureMap& map, std::span<const double> xs);

/// Exact sum: amplitudes add, interior bond dimensions add. The smaller-scale
/// operand is rescaled into the larger one's log_scale before blocking; an
/// operand more than 200 nats down is numerically zero and is dropped with a
/// warning on stderr.
MPS add(const MPS& a, const MPS& b);

/// Gauge transformation only: amplitudes are preserved while site tensors
/// become isometries. Accumulated norms move into log_scale, which keeps
/// entries O(1) even over hundreds of sites. `center` is used for
/// CanonicalForm::mixed.
MPS canonicalized(const MPS& m, CanonicalForm form, std::size_t center = 0);

/// Natural log of the norm of the represented state.
double log_norm(const MPS& m);

struct Compressed {
    MPS mps;
    /// 1 - prod_bonds(1 - per-bond discarded weight): the squared-fidelity
    /// deficit if each bond truncation were applied to an otherwise exact
    /// state; exact when a single bond truncates.
    double discarded_weight = 0.0;
};

/// One canonicalization pass plus one optimal truncation sweep. The output is
/// right-canonical with unit-norm tensors; removed magnitude is folded into
/// log_scale.
Compressed compress_svd(const MPS& m, std::size_t chi_max, double eps_cut);

/// Optimal truncation of a single bond, every other bond left exact.
Compressed truncate_bond(const MPS& m, std::size_t cut, std::size_t chi_max,
                         double eps_cut);

struct VariationalResult {
    MPS mps;
    bool converged = false;
    int sweeps_used = 0;
    /// |<out|target>|^2 for unit-normalized target, at the last update.
    double fidelity_sq = 0.0;
};

/// Alternating one-site least-squares fit of a bond-chi MPS to the target,
/// seeded from compress_svd. Stops when the squared-overlap gain per sweep
/// drops below tol; exhausting max_sweeps returns the best iterate with
/// converged = false.
VariationalResult compress_variational(const MPS& target, std::size_t chi,
                                       int max_sweeps, double tol);
/// Same, but seeded from a caller-supplied initial state of bond <= chi.
VariationalResult compress_variational(const MPS& target, MPS initial,
                                       int max_sweeps, double tol);

/// <a|b> via transfer-matrix contraction with per-site rescaling.
LogComplex inner(const MPS& a, const MPS& b);

LogComplex amplitude(const MPS& m, const SpinConfig& config);

/// <Phi(x)|m>: the wavefunction over continuous pixels induced by the map.
LogComplex amplitude_continuous(const MPS& m, const LocalFeatureMap& map,
                                std::span<const double> xs);

/// Singular values of the unit-normalized state across bond `cut`
/// (1 <= cut <= N-1); their squares sum to one.
std::vector<double> schmidt_spectrum(const MPS& m, std::size_t cut);

/// Born-rule ancestral sampling. Requires a right-canonical unit-norm state.
SpinConfig sample(const MPS& m, std::mt19937_64& rng);

/// Full state vector (d^N entries, guarded at 2^20), scale included.
std::vector<Complex> to_dense(const MPS& m);

} // namespace mpsr
