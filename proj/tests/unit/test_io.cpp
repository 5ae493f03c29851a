#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mpsr/dataset.hpp"
#include "mpsr/errors.hpp"
#include "mpsr/model_io.hpp"
#include "mpsr/pipeline.hpp"
#include "support/oracles.hpp"

using namespace mpsr;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("mpsr_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

Dataset tiny_fixture() {
    Dataset d;
    d.height = 2;
    d.width = 2;
    d.labels = {7, 1};
    d.pixels = {0.0,         1.0,         128.0 / 255.0, 64.0 / 255.0,
                32.0 / 255.0, 16.0 / 255.0, 8.0 / 255.0,  255.0 / 255.0};
    return d;
}

ModelSet tiny_model_set(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ModelSet set;
    set.height = 2;
    set.width = 2;
    for (int label : {0, 1, 4}) {
        ClassModel m;
        MPS state = canonicalized(oracle::random_mps(4, 2, 3, rng),
                                  CanonicalForm::right);
        m.label = label;
        m.log_cnorm = state.log_scale();
        state.set_log_scale(0.0);
        m.state = std::move(state);
        m.map_id = "cos-sin";
        m.chi = 3;
        m.pixel_order = PixelOrder::raster;
        set.models.push_back(std::move(m));
    }
    return set;
}

} // namespace

TEST_CASE("idx: crafted fixture round trips byte values") {
    TempDir dir;
    const Dataset d = tiny_fixture();
    write_idx(d, dir.file("img"), dir.file("lab"));
    const Dataset back = load_idx(dir.file("img"), dir.file("lab"));
    CHECK(back.height == 2);
    CHECK(back.width == 2);
    CHECK(back.labels == d.labels);
    REQUIRE(back.pixels.size() == d.pixels.size());
    for (std::size_t i = 0; i < d.pixels.size(); ++i)
        CHECK(back.pixels[i] == d.pixels[i]);
    back.validate();
}

TEST_CASE("idx: malformed inputs raise format errors") {
    TempDir dir;
    const Dataset d = tiny_fixture();
    write_idx(d, dir.file("img"), dir.file("lab"));

    SUBCASE("truncated image file") {
        std::string bytes = slurp(dir.file("img"));
        std::ofstream(dir.file("img"), std::ios::binary)
            .write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
        CHECK_THROWS_AS((void)load_idx(dir.file("img"), dir.file("lab")),
                        FormatError);
    }
    SUBCASE("bad magic mentions the offset") {
        std::string bytes = slurp(dir.file("img"));
        bytes[3] = 0x05;
        std::ofstream(dir.file("img"), std::ios::binary)
            .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        CHECK_THROWS_WITH_AS((void)load_idx(dir.file("img"), dir.file("lab")),
                             doctest::Contains("offset 0"), FormatError);
    }
    SUBCASE("count mismatch across files") {
        Dataset lab_only = d;
        lab_only.labels.push_back(3);
        lab_only.pixels.insert(lab_only.pixels.end(), 4, 0.5);
        write_idx(lab_only, dir.file("img2"), dir.file("lab2"));
        CHECK_THROWS_AS((void)load_idx(dir.file("img"), dir.file("lab2")),
                        FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_idx(dir.file("nope"), dir.file("lab")),
                        FormatError);
    }
}

TEST_CASE("preprocess: identity, pooling, binarize, snake") {
    Dataset d;
    d.height = 2;
    d.width = 2;
    d.labels = {0};
    d.pixels = {0.0, 1.0, 1.0, 1.0};

    const Dataset same = preprocess(d, {});
    CHECK(same.pixels == d.pixels);

    PreprocessOptions pool2;
    pool2.downscale = 2;
    const Dataset pooled = preprocess(d, pool2);
    REQUIRE(pooled.pixels.size() == 1);
    CHECK(pooled.pixels[0] == doctest::Approx(0.75));

    PreprocessOptions binopts = pool2;
    binopts.binarize = 0.5;
    const Dataset bin = preprocess(d, binopts);
    CHECK(bin.pixels[0] == 1.0);

    Dataset ones;
    ones.height = 28;
    ones.width = 28;
    ones.labels = {2};
    ones.pixels.assign(28 * 28, 1.0);
    const Dataset half = preprocess(ones, pool2);
    CHECK(half.height == 14);
    CHECK(half.width == 14);
    for (double v : half.pixels) CHECK(v == 1.0);

    PreprocessOptions pool3;
    pool3.downscale = 3;
    CHECK_THROWS_AS((void)preprocess(ones, pool3), DomainError);

    // Snake reverses odd rows; applying the row reversal twice is identity.
    Dataset grid;
    grid.height = 3;
    grid.width = 3;
    grid.labels = {0};
    grid.pixels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    PreprocessOptions snaked;
    snaked.order = PixelOrder::snake;
    const Dataset snake = preprocess(grid, snaked);
    CHECK(snake.pixels[3] == 0.5);
    CHECK(snake.pixels[5] == 0.3);
    CHECK(snake.pixel_order == PixelOrder::snake);
    std::vector<double> twice(9);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t cc = r % 2 ? 2 - c : c;
            twice[r * 3 + cc] = snake.pixels[r * 3 + c];
        }
    for (std::size_t i = 0; i < 9; ++i) CHECK(twice[i] == grid.pixels[i]);
}

TEST_CASE("model file: bit-exact round trip") {
    TempDir dir;
    const ModelSet set = tiny_model_set(31337);
    save_model(set, dir.file("m.mpsm"));
    const ModelSet back = load_model(dir.file("m.mpsm"));
    save_model(back, dir.file("m2.mpsm"));
    CHECK(slurp(dir.file("m.mpsm")) == slurp(dir.file("m2.mpsm")));

    REQUIRE(back.models.size() == set.models.size());
    for (std::size_t i = 0; i < set.models.size(); ++i) {
        CHECK(back.models[i].label == set.models[i].label);
        CHECK(back.models[i].log_cnorm == set.models[i].log_cnorm);
        CHECK(back.models[i].map_id == set.models[i].map_id);
        for (std::size_t k = 0; k < 4; ++k) {
            const DenseTensor& a = set.models[i].state.site(k);
            const DenseTensor& b = back.models[i].state.site(k);
            REQUIRE(a.shape() == b.shape());
            for (std::size_t e = 0; e < a.size(); ++e) CHECK(a[e] == b[e]);
        }
    }
}

TEST_CASE("model file: corruption and version checks") {
    TempDir dir;
    save_model(tiny_model_set(99), dir.file("m.mpsm"));
    std::string bytes = slurp(dir.file("m.mpsm"));

    SUBCASE("flipped payload byte fails the checksum") {
        std::string bad = bytes;
        bad[bytes.size() / 2] = static_cast<char>(bad[bytes.size() / 2] ^ 0x40);
        std::ofstream(dir.file("bad.mpsm"), std::ios::binary)
            .write(bad.data(), static_cast<std::streamsize>(bad.size()));
        CHECK_THROWS_WITH_AS((void)load_model(dir.file("bad.mpsm")),
                             doctest::Contains("checksum"), FormatError);
    }
    SUBCASE("unknown version is rejected") {
        std::string bad = bytes;
        bad[4] = 9;
        std::ofstream(dir.file("v9.mpsm"), std::ios::binary)
            .write(bad.data(), static_cast<std::streamsize>(bad.size()));
        CHECK_THROWS_WITH_AS((void)load_model(dir.file("v9.mpsm")),
                             doctest::Contains("version"), FormatError);
    }
    SUBCASE("wrong magic is rejected") {
        std::string bad = bytes;
        bad[0] = 'X';
        std::ofstream(dir.file("x.mpsm"), std::ios::binary)
            .write(bad.data(), static_cast<std::streamsize>(bad.size()));
        CHECK_THROWS_AS((void)load_model(dir.file("x.mpsm")), FormatError);
    }
}

TEST_CASE("metrics and image exports") {
    TempDir dir;
    MetricRecord rec;
    rec.chi = 16;
    rec.strategy = "tree";
    rec.map_id = "cos-sin";
    rec.accuracy = 0.8125;
    rec.mean_sq_overlap = 0.0123456789;
    rec.wall_time_s = 1.5;
    export_metrics(std::vector<MetricRecord>{rec}, dir.file("m.csv"));
    std::ifstream in(dir.file("m.csv"));
    std::string header, line, extra;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header ==
          "chi,strategy,map_id,accuracy,mean_sq_overlap,wall_time_s");
    CHECK(line == "16,tree,cos-sin,0.8125,0.0123456789,1.5");
    CHECK_FALSE(std::getline(in, extra));

    export_image_pgm(std::vector<double>(4, 0.0), 2, 2, dir.file("z.pgm"));
    const std::string pgm = slurp(dir.file("z.pgm"));
    CHECK(pgm == std::string("P5\n2 2\n255\n\0\0\0\0", 15));

    export_image_pbm(std::vector<std::size_t>{1, 0, 0, 1}, 2, 2,
                     dir.file("b.pbm"));
    CHECK(slurp(dir.file("b.pbm")) == "P1\n2 2\n1 0\n0 1\n");
}

TEST_CASE("curve export survives a CSV round trip to 6 digits") {
    TempDir dir;
    const LocalFeatureMap map = LocalFeatureMap::sin_basis(4);
    std::vector<double> xs(101);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = i / 100.0;
    const auto psi = smooth_delta(map, 0.5, xs);
    export_curve(xs, psi, dir.file("c.csv"));

    std::ifstream in(dir.file("c.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,re,im,abs");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        REQUIRE(std::getline(in, line));
        double x, re, im, mag;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x, &re, &im,
                            &mag) == 4);
        CHECK(x == doctest::Approx(xs[i]).epsilon(1e-6));
        CHECK(re == doctest::Approx(psi[i].real()).epsilon(1e-6));
        CHECK(im == doctest::Approx(psi[i].imag()).epsilon(1e-6));
        CHECK(mag == doctest::Approx(std::abs(psi[i])).epsilon(1e-6));
    }
}

TEST_CASE("pipeline: pretrain, save, load, classify round trip") {
    TempDir dir;
    std::mt19937_64 rng(410);
    // Two synthetic classes on 4x4 rasters: bright top half vs bright
    // bottom half, with noise.
    Dataset train;
    train.height = 4;
    train.width = 4;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto emit = [&](Dataset& d, int label, int count) {
        for (int i = 0; i < count; ++i) {
            for (std::size_t p = 0; p < 16; ++p) {
                const bool top = p < 8;
                const bool bright = label == 0 ? top : !top;
                const double base = bright ? 0.8 : 0.15;
                d.pixels.push_back(
                    std::clamp(base + 0.15 * (unif(rng) - 0.5), 0.0, 1.0));
            }
            d.labels.push_back(label);
        }
    };
    emit(train, 0, 24);
    emit(train, 1, 24);
    Dataset test;
    test.height = 4;
    test.width = 4;
    emit(test, 0, 20);
    emit(test, 1, 20);

    RunConfig cfg;
    cfg.map_id = "cos-sin";
    cfg.chi = 4;
    cfg.downscale = 1;
    cfg.workers = 2;
    const ModelSet set = pretrain(train, cfg);
    const AccuracyReport direct = classify_dataset(set, test, 2);
    CHECK(direct.accuracy == 1.0);

    save_model(set, dir.file("m.mpsm"));
    const ModelSet loaded = load_model(dir.file("m.mpsm"));
    const AccuracyReport after = classify_dataset(loaded, test, 1);
    CHECK(after.accuracy == direct.accuracy);
    CHECK(after.correct == direct.correct);
}
