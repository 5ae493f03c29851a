#include "mpsr/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpsr/errors.hpp"
#include "mpsr/parallel.hpp"

namespace mpsr {

namespace {

void check_images(std::span<const ImageView> xs, const char* op) {
    if (xs.empty()) throw DimensionError(std::string(op) + ": empty image list");
    for (const ImageView& x : xs)
        if (x.size() != xs.front().size())
            throw DimensionError(std::string(op) +
                                 ": images have differing pixel counts");
}

// Per-image, per-site feature vectors, evaluated once.
std::vector<Complex> feature_table(const LocalFeatureMap& map,
                                   std::span<const ImageView> xs) {
    const std::size_t n = xs.size(), sites = xs.front().size(), d = map.dim();
    std::vector<Complex> table(n * sites * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < sites; ++k)
            map.evaluate_into(xs[i][k],
                              {&table[(i * sites + k) * d], d});
    return table;
}

MPS compress_with_polish(const MPS& summed, const ReductionPlan& plan) {
    // One canonicalization pass serves both the SVD sweep and, as the
    // variational target, the polish.
    const MPS canon = canonicalized(summed, CanonicalForm::left);
    Compressed c = compress_svd(canon, plan.chi, 0.0);
    // A variational polish cannot improve an exact compression; skip it when
    // nothing was discarded.
    if (plan.sweeps > 0 && c.discarded_weight > 1e-24) {
        VariationalResult v = compress_variational(canon, std::move(c.mps),
                                                   plan.sweeps, plan.tol);
        return std::move(v.mps);
    }
    return std::move(c.mps);
}

} // namespace

MPS exact_batch(const LocalFeatureMap& map, std::span<const ImageView> xs) {
    check_images(xs, "exact_batch");
    if (xs.size() == 1) return product_state(map, xs.front());

    const std::size_t batch = xs.size();
    const std::size_t sites = xs.front().size();
    const std::size_t d = map.dim();
    std::vector<Complex> phi(d);

    if (sites == 1) {
        DenseTensor t({1, d, 1});
        for (const ImageView& x : xs) {
            map.evaluate_into(x[0], phi);
            for (std::size_t s = 0; s < d; ++s) t.at({0, s, 0}) += phi[s];
        }
        return MPS({std::move(t)}, 0.0, map.id());
    }

    // Block-diagonal sum: slot i of every interior bond carries image i's
    // product state.
    std::vector<DenseTensor> out;
    out.reserve(sites);
    for (std::size_t k = 0; k < sites; ++k) {
        const std::size_t nl = (k == 0) ? 1 : batch;
        const std::size_t nr = (k + 1 == sites) ? 1 : batch;
        DenseTensor t({nl, d, nr});
        for (std::size_t i = 0; i < batch; ++i) {
            map.evaluate_into(xs[i][k], phi);
            const std::size_t row = (k == 0) ? 0 : i;
            const std::size_t col = (k + 1 == sites) ? 0 : i;
            for (std::size_t s = 0; s < d; ++s) t.at({row, s, col}) = phi[s];
        }
        out.push_back(std::move(t));
    }
    return MPS(std::move(out), 0.0, map.id());
}

MPS reduce_pair(const MPS& a, const MPS& b, const ReductionPlan& plan) {
    return compress_with_polish(add(a, b), plan);
}

MPS tree_reduce(const LocalFeatureMap& map, std::span<const ImageView> images,
                const ReductionPlan& plan) {
    check_images(images, "tree_reduce");
    if (plan.chi == 0) throw DomainError("plan.chi must be positive");

    const std::size_t lb = plan.resolved_leaf_batch();
    const std::size_t n_leaves = (images.size() + lb - 1) / lb;

    std::vector<MPS> nodes(n_leaves);
    parallel_for(n_leaves, plan.worker_limit, [&](std::size_t i) {
        const std::size_t begin = i * lb;
        const std::size_t count = std::min(lb, images.size() - begin);
        MPS leaf = exact_batch(map, images.subspan(begin, count));
        if (leaf.max_bond() > plan.chi) leaf = compress_with_polish(leaf, plan);
        nodes[i] = std::move(leaf);
    });

    while (nodes.size() > 1) {
        const std::size_t pairs = nodes.size() / 2;
        std::vector<MPS> next(pairs + nodes.size() % 2);
        parallel_for(pairs, plan.worker_limit, [&](std::size_t i) {
            next[i] = reduce_pair(nodes[2 * i], nodes[2 * i + 1], plan);
        });
        if (nodes.size() % 2) next.back() = std::move(nodes.back());
        nodes = std::move(next);
    }

    MPS root = std::move(nodes.front());
    if (root.canonical() != CanonicalForm::right)
        root = canonicalized(root, CanonicalForm::right);
    return root;
}

MPS direct_sum_compress(const LocalFeatureMap& map,
                        std::span<const ImageView> images,
                        const ReductionPlan& plan) {
    check_images(images, "direct_sum_compress");
    const std::size_t n = images.size();
    const std::size_t entries =
        n * map.dim() * images.front().size() * n; // chi of the exact sum = n
    if (entries > plan.max_sum_entries)
        throw CapacityError(
            "direct_sum_compress: exact sum needs " + std::to_string(entries) +
            " tensor entries (cap " + std::to_string(plan.max_sum_entries) +
            "); use the tree strategy or a smaller subset");

    MPS sum = exact_batch(map, images);
    if (sum.max_bond() <= plan.chi && plan.sweeps <= 0)
        return canonicalized(sum, CanonicalForm::right);
    VariationalResult v =
        compress_variational(sum, plan.chi, std::max(plan.sweeps, 1), plan.tol);
    return std::move(v.mps);
}

double log_cnorm_sq(const LocalFeatureMap& map,
                    std::span<const ImageView> images) {
    check_images(images, "log_cnorm_sq");
    const std::size_t n = images.size();
    const std::size_t sites = images.front().size();
    const std::size_t d = map.dim();
    const std::vector<Complex> feat = feature_table(map, images);
    auto phi = [&](std::size_t i, std::size_t k) {
        return &feat[(i * sites + k) * d];
    };

    // Terms <Phi_i|Phi_j> in log form; the total is the squared norm of the
    // summed state, so it is real and positive.
    std::vector<LogComplex> terms;
    terms.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double lm = 0.0;
            Complex ph{1.0, 0.0};
            bool zero = false;
            for (std::size_t k = 0; k < sites && !zero; ++k) {
                Complex acc = 0.0;
                const Complex* a = phi(i, k);
                const Complex* b = phi(j, k);
                for (std::size_t s = 0; s < d; ++s)
                    acc += std::conj(a[s]) * b[s];
                const double mag = std::abs(acc);
                if (mag == 0.0) {
                    zero = true;
                    break;
                }
                lm += std::log(mag);
                ph *= acc / mag;
            }
            if (!zero) {
                if (i != j) ph *= 2.0; // hermitian pair (i,j)+(j,i)
                terms.push_back({lm, ph});
            }
        }
    }
    if (terms.empty()) return -std::numeric_limits<double>::infinity();

    double peak = -std::numeric_limits<double>::infinity();
    for (const LogComplex& t : terms) peak = std::max(peak, t.log_mag);
    Complex total = 0.0;
    for (const LogComplex& t : terms)
        total += std::exp(t.log_mag - peak) * t.phase;
    const double re = total.real();
    if (!(re > 0.0))
        throw NumericalError("C_Norm^2 did not come out positive");
    return peak + std::log(re);
}

OverlapResult mean_sq_overlap(const MPS& model, const LocalFeatureMap& map,
                              std::span<const ImageView> images,
                              const OverlapOptions& opts) {
    check_images(images, "mean_sq_overlap");

    std::vector<ImageView> subset;
    std::span<const ImageView> used = images;
    OverlapResult res;
    const std::size_t n = images.size();
    if (n * (n + 1) / 2 > opts.max_pairs) {
        if (!opts.allow_subset)
            throw CapacityError(
                "mean_sq_overlap: " + std::to_string(n * (n + 1) / 2) +
                " pairwise terms exceed the cap; pass allow_subset to "
                "estimate from a random subset");
        // Fixed-seed subsample: the result estimates the overlap with the
        // subset's own sum state.
        std::mt19937_64 rng(opts.seed);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t m = std::min(opts.subset_size, n);
        subset.reserve(m);
        for (std::size_t i = 0; i < m; ++i) subset.push_back(images[idx[i]]);
        used = subset;
        res.exact = false;
    }
    res.images_used = used.size();

    const double model_log_norm = log_norm(model);

    std::vector<LogComplex> overlaps(used.size());
    for (std::size_t i = 0; i < used.size(); ++i)
        overlaps[i] = inner(model, product_state(map, used[i]));

    double peak = -std::numeric_limits<double>::infinity();
    for (const LogComplex& t : overlaps)
        if (!t.is_zero()) peak = std::max(peak, t.log_mag);
    if (peak == -std::numeric_limits<double>::infinity()) {
        res.value = 0.0;
        return res;
    }
    Complex total = 0.0;
    for (const LogComplex& t : overlaps)
        if (!t.is_zero()) total += std::exp(t.log_mag - peak) * t.phase;
    const double mag = std::abs(total);
    if (mag == 0.0) {
        res.value = 0.0;
        return res;
    }
    const double log_num = peak + std::log(mag) - model_log_norm;
    const double log_c2 = log_cnorm_sq(map, used);
    res.value = std::exp(2.0 * log_num - log_c2);
    return res;
}

} // namespace mpsr
