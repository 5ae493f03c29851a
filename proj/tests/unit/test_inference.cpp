#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mpsr/errors.hpp"
#include "mpsr/inference.hpp"
#include "support/oracles.hpp"

using namespace mpsr;

namespace {

ClassModel make_model(int label, MPS state, const std::string& map_id) {
    MPS unit = canonicalized(state, CanonicalForm::right);
    ClassModel m;
    m.label = label;
    m.log_cnorm = unit.log_scale();
    unit.set_log_scale(0.0);
    m.state = std::move(unit);
    m.map_id = map_id;
    m.chi = m.state.max_bond();
    return m;
}

std::vector<ImageView> views(const std::vector<std::vector<double>>& imgs) {
    return {imgs.begin(), imgs.end()};
}

} // namespace

TEST_CASE("log_likelihood: self, orthogonal floor, dense oracle") {
    const LocalFeatureMap cs = LocalFeatureMap::cos_sin();
    std::mt19937_64 rng(401);
    const std::vector<double> x0 = oracle::random_image(6, rng);
    const ClassModel m = make_model(0, product_state(cs, x0), "cos-sin");

    CHECK(std::abs(log_likelihood(m, x0)) < 1e-10);

    // Indicator pixels are exactly orthogonal across the halves, so a single
    // opposite-half pixel drives the likelihood to the floor.
    const LocalFeatureMap ind = LocalFeatureMap::indicator();
    std::vector<double> ortho(6, 0.2);
    ortho[2] = 0.9;
    const ClassModel corner = make_model(
        0, product_state(ind, std::vector<double>(6, 0.2)), "indicator");
    CHECK(log_likelihood(corner, ortho) == -1e9);

    const MPS random_state = oracle::random_mps(6, 2, 4, rng);
    const ClassModel r = make_model(1, random_state, "cos-sin");
    const auto dense = oracle::dense_from_mps(r.state);
    for (int t = 0; t < 5; ++t) {
        const auto q = oracle::random_image(6, rng);
        std::vector<std::vector<Complex>> rows;
        for (double v : q) rows.push_back(cs.evaluate(v));
        const Complex overlap = oracle::dot(oracle::kron_chain(rows), dense);
        CHECK(log_likelihood(r, q) ==
              doctest::Approx(2.0 * std::log(std::abs(overlap))).epsilon(1e-10));
    }
    CHECK_THROWS_AS((void)log_likelihood(r, std::vector<double>{0.5}),
                    DimensionError);
}

TEST_CASE("classify: separated corners, tie rule, dense argmax") {
    const LocalFeatureMap ind = LocalFeatureMap::indicator();
    ModelSet set;
    set.height = 1;
    set.width = 4;
    set.models.push_back(
        make_model(3, product_state(ind, std::vector<double>(4, 0.1)),
                   "indicator"));
    set.models.push_back(
        make_model(7, product_state(ind, std::vector<double>(4, 0.9)),
                   "indicator"));
    CHECK(classify(set, std::vector<double>(4, 0.2)) == 3);
    CHECK(classify(set, std::vector<double>(4, 0.8)) == 7);

    // Identical models: the smallest label wins.
    ModelSet ties;
    ties.height = 1;
    ties.width = 4;
    for (int label : {2, 5, 6})
        ties.models.push_back(make_model(
            label, product_state(ind, std::vector<double>(4, 0.1)),
            "indicator"));
    CHECK(classify(ties, std::vector<double>(4, 0.3)) == 2);

    std::mt19937_64 rng(402);
    const LocalFeatureMap cs = LocalFeatureMap::cos_sin();
    ModelSet rnd;
    rnd.height = 2;
    rnd.width = 3;
    for (int label = 0; label < 3; ++label)
        rnd.models.push_back(
            make_model(label, oracle::random_mps(6, 2, 4, rng), "cos-sin"));
    for (int t = 0; t < 10; ++t) {
        const auto q = oracle::random_image(6, rng);
        std::vector<std::vector<Complex>> rows;
        for (double v : q) rows.push_back(cs.evaluate(v));
        const auto probe = oracle::kron_chain(rows);
        int best = -1;
        double best_ll = -1e300;
        for (const ClassModel& m : rnd.models) {
            const double ll = 2.0 * std::log(std::abs(oracle::dot(
                                  probe, oracle::dense_from_mps(m.state))));
            if (ll > best_ll) {
                best_ll = ll;
                best = m.label;
            }
        }
        CHECK(classify(rnd, q) == best);
    }
}

TEST_CASE("classify is blind to a global phase on any model") {
    std::mt19937_64 rng(403);
    ModelSet set;
    set.height = 2;
    set.width = 3;
    for (int label = 0; label < 3; ++label)
        set.models.push_back(
            make_model(label, oracle::random_mps(6, 2, 3, rng), "cos-sin"));

    ModelSet rotated = set;
    const Complex phase = std::polar(1.0, 1.234);
    for (ClassModel& m : rotated.models) {
        MPS s = m.state;
        s.site_mut(0).scale(phase);
        s.set_canonical(CanonicalForm::right);
        m.state = std::move(s);
    }
    for (int t = 0; t < 20; ++t) {
        const auto q = oracle::random_image(6, rng);
        CHECK(classify(set, q) == classify(rotated, q));
    }
}

TEST_CASE("evaluate_accuracy: defining images, permutation invariance") {
    const LocalFeatureMap ind = LocalFeatureMap::indicator();
    ModelSet set;
    set.height = 1;
    set.width = 4;
    const std::vector<double> a(4, 0.1), b(4, 0.9);
    set.models.push_back(make_model(0, product_state(ind, a), "indicator"));
    set.models.push_back(make_model(1, product_state(ind, b), "indicator"));

    Dataset test;
    test.height = 1;
    test.width = 4;
    for (int rep = 0; rep < 3; ++rep) {
        test.pixels.insert(test.pixels.end(), a.begin(), a.end());
        test.labels.push_back(0);
        test.pixels.insert(test.pixels.end(), b.begin(), b.end());
        test.labels.push_back(1);
    }
    const AccuracyReport rep = evaluate_accuracy(set, test, 2);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.correct == 6);
    CHECK(rep.confusion[0][0] == 3);
    CHECK(rep.confusion[1][1] == 3);

    // Permuting the test set changes nothing.
    Dataset perm = test;
    std::swap(perm.labels[0], perm.labels[5]);
    for (std::size_t p = 0; p < 4; ++p)
        std::swap(perm.pixels[p], perm.pixels[5 * 4 + p]);
    CHECK(evaluate_accuracy(set, perm, 1).accuracy == 1.0);
}

TEST_CASE("sample_binary matches mps sampling on a canonical state") {
    const LocalFeatureMap cs = LocalFeatureMap::cos_sin();
    const ClassModel corner =
        make_model(0, product_state(cs, std::vector<double>(5, 1.0)),
                   "cos-sin");
    std::mt19937_64 rng(404);
    for (int t = 0; t < 20; ++t) {
        const SpinConfig c = sample_binary(corner, rng);
        for (std::size_t v : c.values) CHECK(v == 1);
    }
}

TEST_CASE("sample_grey: indicator pixels given s=0 are uniform on [0,0.5)") {
    const LocalFeatureMap cs = LocalFeatureMap::cos_sin();
    const LocalFeatureMap ind = LocalFeatureMap::indicator();
    const ClassModel corner =
        make_model(0, product_state(cs, std::vector<double>(4, 0.0)),
                   "cos-sin");
    std::mt19937_64 rng(405);
    double mean = 0.0;
    std::size_t count = 0;
    for (int t = 0; t < 25000; ++t) {
        const auto x = sample_grey(corner, ind, rng);
        for (double v : x) {
            REQUIRE(v >= 0.0);
            REQUIRE(v < 0.5);
            mean += v;
            ++count;
        }
    }
    CHECK(std::abs(mean / static_cast<double>(count) - 0.25) < 0.005);
    CHECK_THROWS_AS((void)sample_grey(corner, cs, rng), ContractViolation);
}

TEST_CASE("sample_grey: phased marginal mean and pixel independence") {
    const LocalFeatureMap cs = LocalFeatureMap::cos_sin();
    const LocalFeatureMap ph = LocalFeatureMap::phased();
    const ClassModel corner =
        make_model(0, product_state(cs, std::vector<double>(4, 0.0)),
                   "cos-sin");
    std::mt19937_64 rng(406);
    const int n = 50000;
    double m0 = 0.0, m1 = 0.0, m01 = 0.0;
    for (int t = 0; t < n; ++t) {
        const auto x = sample_grey(corner, ph, rng);
        m0 += x[0];
        m1 += x[1];
        m01 += x[0] * x[1];
    }
    m0 /= n;
    m1 /= n;
    m01 /= n;
    const double want = 0.5 - 2.0 / (std::numbers::pi * std::numbers::pi);
    CHECK(std::abs(m0 - want) < 0.005);
    // Conditional independence: covariance vanishes for a deterministic s.
    const double var = want - want * want; // rough scale for the bound
    CHECK(std::abs(m01 - m0 * m1) / var < 0.02);
}

TEST_CASE("sample_grey: per-pixel marginal matches the analytic mixture") {
    const LocalFeatureMap cs = LocalFeatureMap::cos_sin();
    const LocalFeatureMap ph = LocalFeatureMap::phased();
    std::mt19937_64 rng(407);
    // Entangled 4-site model so P(s_k) is a real mixture.
    const MPS state = oracle::random_mps(4, 2, 3, rng);
    const ClassModel m = make_model(0, state, "cos-sin");

    // Exact P(s_0 = s) by enumeration of the dense Born distribution.
    const auto p = oracle::born_distribution(oracle::dense_from_mps(m.state));
    double p0 = 0.0;
    for (std::size_t cfg = 0; cfg < p.size(); ++cfg)
        if (((cfg >> 3) & 1) == 0) p0 += p[cfg];

    std::vector<double> samples;
    const int n = 100000;
    samples.reserve(n);
    for (int t = 0; t < n; ++t)
        samples.push_back(sample_grey(m, ph, rng)[0]);

    // Mixture CDF: p0 * CDF_0(x) + (1-p0) * CDF_1(x) with
    // CDF_0(x) = x + sin(pi x)/pi and CDF_1(x) = x - sin(pi x)/pi.
    const double ks =
        oracle::ks_statistic(std::move(samples), [p0](double x) {
            const double s = std::sin(std::numbers::pi * x) / std::numbers::pi;
            return p0 * (x + s) + (1.0 - p0) * (x - s);
        });
    CHECK(ks < 0.02);
}

TEST_CASE("kde_amplitude: self point, single-site kernel, exact-sum oracle") {
    const LocalFeatureMap ph = LocalFeatureMap::phased();
    std::mt19937_64 rng(408);

    const std::vector<std::vector<double>> one{oracle::random_image(5, rng)};
    const LogComplex self = kde_amplitude(ph, views(one), one[0]);
    CHECK(std::abs(self.log_mag) < 1e-12);

    // One pixel: the estimator is the delta-smoothing kernel (conjugated),
    // normalized by C = 1.
    const std::vector<std::vector<double>> pix{{0.3}};
    for (double q : {0.1, 0.55, 0.9}) {
        const LogComplex got = kde_amplitude(ph, views(pix), std::vector<double>{q});
        const auto kernel = smooth_delta(ph, q, std::vector<double>{0.3});
        CHECK(std::abs(got.value() - kernel[0]) < 1e-12);
    }

    const LocalFeatureMap cs = LocalFeatureMap::cos_sin();
    std::vector<std::vector<double>> imgs;
    for (int i = 0; i < 16; ++i) imgs.push_back(oracle::random_image(6, rng));
    MPS exact = exact_batch(cs, views(imgs));
    MPS unit = canonicalized(exact, CanonicalForm::right);
    const double log_c = unit.log_scale();
    unit.set_log_scale(0.0);
    for (int t = 0; t < 10; ++t) {
        const auto q = oracle::random_image(6, rng);
        const LogComplex kde = kde_amplitude(cs, views(imgs), q);
        const LogComplex direct = amplitude_continuous(unit, cs, q);
        CHECK(std::abs(kde.value() - direct.value()) <
              1e-10 * std::abs(direct.value()));
        (void)log_c;
    }

    CHECK_THROWS_AS((void)kde_amplitude(cs, views(imgs), oracle::random_image(6, rng), 10),
                    CapacityError);
}
