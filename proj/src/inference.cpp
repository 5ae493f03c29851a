#include "mpsr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpsr/errors.hpp"
#include "mpsr/parallel.hpp"

namespace mpsr {

namespace {

constexpr double kLogFloor = -1e9;

} // namespace

const ClassModel* ModelSet::find(int label) const {
    for (const ClassModel& m : models)
        if (m.label == label) return &m;
    return nullptr;
}

void ModelSet::validate() const {
    if (models.empty()) throw DimensionError("model set is empty");
    const ClassModel& first = models.front();
    for (std::size_t i = 0; i < models.size(); ++i) {
        const ClassModel& m = models[i];
        if (i > 0 && models[i - 1].label >= m.label)
            throw DimensionError("model labels must be strictly increasing");
        if (m.map_id != first.map_id || m.chi != first.chi ||
            m.pixel_order != first.pixel_order ||
            m.state.site_count() != first.state.site_count())
            throw DimensionError("models disagree on shared metadata");
    }
    if (first.state.site_count() != height * width)
        throw DimensionError("model site count does not match height*width");
}

double log_likelihood(const ClassModel& model, std::span<const double> x) {
    if (x.size() != model.state.site_count())
        throw DimensionError("image length " + std::to_string(x.size()) +
                             " does not match site count " +
                             std::to_string(model.state.site_count()));
    const LocalFeatureMap map = LocalFeatureMap::from_id(model.map_id);
    const LogComplex overlap = amplitude_continuous(model.state, map, x);
    const double ll = 2.0 * overlap.log_mag;
    if (!(ll > -1e300)) return kLogFloor;
    return ll;
}

int classify(const ModelSet& set, std::span<const double> x) {
    if (set.models.empty()) throw DimensionError("model set is empty");
    const LocalFeatureMap map = LocalFeatureMap::from_id(set.models[0].map_id);
    const MPS probe = product_state(map, x);
    int best_label = set.models.front().label;
    double best = -std::numeric_limits<double>::infinity();
    for (const ClassModel& m : set.models) {
        const LogComplex overlap = inner(probe, m.state);
        double ll = 2.0 * overlap.log_mag;
        if (!(ll > -1e300)) ll = kLogFloor;
        if (ll > best) { // ties keep the earlier (smaller) label
            best = ll;
            best_label = m.label;
        }
    }
    return best_label;
}

AccuracyReport evaluate_accuracy(const ModelSet& set, const Dataset& test,
                                 int workers) {
    set.validate();
    AccuracyReport rep;
    rep.total = test.count();
    rep.labels.reserve(set.models.size());
    for (const ClassModel& m : set.models) rep.labels.push_back(m.label);
    rep.confusion.assign(rep.labels.size(),
                         std::vector<std::size_t>(rep.labels.size(), 0));

    std::vector<int> predicted(test.count());
    parallel_for(test.count(), workers, [&](std::size_t i) {
        predicted[i] = classify(set, test.image(i));
    });

    auto label_index = [&](int label) -> std::ptrdiff_t {
        const auto it =
            std::lower_bound(rep.labels.begin(), rep.labels.end(), label);
        if (it == rep.labels.end() || *it != label) return -1;
        return it - rep.labels.begin();
    };
    for (std::size_t i = 0; i < test.count(); ++i) {
        const std::ptrdiff_t t = label_index(test.labels[i]);
        const std::ptrdiff_t p = label_index(predicted[i]);
        if (t < 0) {
            ++rep.unmatched;
            continue;
        }
        ++rep.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        if (test.labels[i] == predicted[i]) ++rep.correct;
    }
    rep.accuracy = rep.total
                       ? static_cast<double>(rep.correct) /
                             static_cast<double>(rep.total)
                       : 0.0;
    return rep;
}

SpinConfig sample_binary(const ClassModel& model, std::mt19937_64& rng) {
    if (model.state.canonical() == CanonicalForm::right)
        return sample(model.state, rng);
    const MPS canon = canonicalized(model.state, CanonicalForm::right);
    return sample(canon, rng);
}

std::vector<double> sample_grey(const ClassModel& model,
                                const LocalFeatureMap& ortho_map,
                                std::mt19937_64& rng) {
    if (!ortho_map.claims_orthonormal())
        throw ContractViolation("grey-scale sampling needs an orthonormal "
                                "map; '" +
                                ortho_map.id() + "' is not");
    if (ortho_map.dim() != model.state.phys_dim())
        throw DimensionError("map dimension does not match model");
    const SpinConfig s = sample_binary(model, rng);
    std::vector<double> x(s.values.size());
    for (std::size_t k = 0; k < s.values.size(); ++k)
        x[k] = sample_conditional(ortho_map, s.values[k], rng);
    return x;
}

LogComplex kde_amplitude(const LocalFeatureMap& map,
                         std::span<const ImageView> images,
                         std::span<const double> x, std::size_t max_pairs) {
    if (images.empty()) throw DimensionError("kde_amplitude: no images");
    const std::size_t n = images.size();
    if (n * (n + 1) / 2 > max_pairs)
        throw CapacityError("kde_amplitude: C_Norm needs " +
                            std::to_string(n * (n + 1) / 2) +
                            " pairwise terms, above the cap of " +
                            std::to_string(max_pairs));
    const std::size_t sites = x.size();
    const std::size_t d = map.dim();
    for (const ImageView& img : images)
        if (img.size() != sites)
            throw DimensionError("kde_amplitude: image size mismatch");

    std::vector<Complex> probe(sites * d), phi(d);
    for (std::size_t k = 0; k < sites; ++k)
        map.evaluate_into(x[k], {&probe[k * d], d});

    // term_i = <Phi(x)|Phi(x_i)> accumulated in log form.
    std::vector<LogComplex> terms;
    terms.reserve(n);
    for (const ImageView& img : images) {
        double lm = 0.0;
        Complex ph{1.0, 0.0};
        bool zero = false;
        for (std::size_t k = 0; k < sites; ++k) {
            map.evaluate_into(img[k], phi);
            Complex acc = 0.0;
            for (std::size_t s = 0; s < d; ++s)
                acc += std::conj(probe[k * d + s]) * phi[s];
            const double mag = std::abs(acc);
            if (mag == 0.0) {
                zero = true;
                break;
            }
            lm += std::log(mag);
            ph *= acc / mag;
        }
        if (!zero) terms.push_back({lm, ph});
    }
    if (terms.empty()) return {};

    double peak = -std::numeric_limits<double>::infinity();
    for (const LogComplex& t : terms) peak = std::max(peak, t.log_mag);
    Complex total = 0.0;
    for (const LogComplex& t : terms)
        total += std::exp(t.log_mag - peak) * t.phase;
    const double mag = std::abs(total);
    if (mag == 0.0) return {};

    const double log_c = 0.5 * log_cnorm_sq(map, images);
    return {peak + std::log(mag) - log_c, total / mag};
}

} // namespace mpsr
