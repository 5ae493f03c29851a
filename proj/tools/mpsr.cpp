// Command line for the MPS Born machine toolkit: pre-train digit
// wavefunctions by sum-and-compress reduction, then classify, sample and
// inspect them.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpsr/errors.hpp"
#include "mpsr/model_io.hpp"
#include "mpsr/pipeline.hpp"

namespace {

using namespace mpsr;

int resolve_workers(int flag_value) {
    if (const char* env = std::getenv("MPSR_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
            std::cerr << "mpsr: ignoring malformed MPSR_WORKERS='" << env
                      << "'\n";
        }
    }
    return flag_value;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

struct CommonPretrainFlags {
    std::string train_images, train_labels, out = "model.mpsm";
    RunConfig cfg;
    std::string strategy = "tree";
    std::string order = "raster";
    double binarize = -1.0;
};

int cmd_pretrain(const CommonPretrainFlags& f) {
    RunConfig cfg = f.cfg;
    cfg.strategy = f.strategy == "direct" ? Strategy::direct : Strategy::tree;
    cfg.order = pixel_order_from_string(f.order);
    if (f.binarize >= 0.0) cfg.binarize = f.binarize;
    cfg.workers = resolve_workers(cfg.workers);

    const auto t0 = std::chrono::steady_clock::now();
    const Dataset train = load_idx(f.train_images, f.train_labels);
    std::cout << "loaded " << train.count() << " training images ("
              << train.height << "x" << train.width << ")\n";
    const ModelSet set = pretrain(train, cfg);
    save_model(set, f.out);
    std::cout << "pretrained " << set.models.size() << " digit wavefunctions"
              << " (chi=" << cfg.chi << ", strategy=" << f.strategy
              << ", map=" << cfg.map_id << ") in " << seconds_since(t0)
              << " s -> " << f.out << "\n";
    return 0;
}

int cmd_classify(const std::string& model_path, const std::string& images,
                 const std::string& labels, const std::string& metrics,
                 int workers) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSet set = load_model(model_path);
    const Dataset test = load_idx(images, labels);
    const AccuracyReport rep =
        classify_dataset(set, test, resolve_workers(workers));
    const double wall = seconds_since(t0);

    std::cout << "accuracy " << rep.accuracy << " (" << rep.correct << "/"
              << rep.total << ") in " << wall << " s\n";
    std::cout << "confusion (rows true, cols predicted):\n";
    for (std::size_t i = 0; i < rep.labels.size(); ++i) {
        std::cout << "  " << rep.labels[i] << ":";
        for (std::size_t j = 0; j < rep.labels.size(); ++j)
            std::cout << " " << rep.confusion[i][j];
        std::cout << "\n";
    }
    if (!metrics.empty()) {
        MetricRecord rec;
        rec.chi = set.models.front().chi;
        rec.strategy = "";
        rec.map_id = set.models.front().map_id;
        rec.accuracy = rep.accuracy;
        rec.mean_sq_overlap = 0.0;
        rec.wall_time_s = wall;
        export_metrics(std::vector<MetricRecord>{rec}, metrics);
        std::cout << "metrics -> " << metrics << "\n";
    }
    return 0;
}

int cmd_sample(const std::string& model_path, int label, std::size_t count,
               const std::string& mode, const std::string& grey_map,
               std::uint64_t seed, const std::string& outdir) {
    ModelSet set = load_model(model_path);
    const ClassModel* found = set.find(label);
    if (!found) throw DomainError("model has no label " + std::to_string(label));

    // Canonicalize once; every draw reuses it.
    ClassModel model = *found;
    model.state = canonicalized(model.state, CanonicalForm::right);
    model.state.set_log_scale(0.0);

    std::filesystem::create_directories(outdir);
    std::mt19937_64 rng(seed);
    const std::size_t h = set.height, w = set.width;

    for (std::size_t i = 0; i < count; ++i) {
        const std::string stem = outdir + "/" + mode + "_" +
                                 std::to_string(label) + "_" +
                                 std::to_string(i);
        if (mode == "binary") {
            const SpinConfig s = sample_binary(model, rng);
            export_image_pbm(s.values, h, w, stem + ".pbm");
        } else {
            const LocalFeatureMap map = LocalFeatureMap::from_id(grey_map);
            const std::vector<double> x = sample_grey(model, map, rng);
            export_image_pgm(x, h, w, stem + ".pgm");
        }
    }
    std::cout << "wrote " << count << " " << mode << " samples for label "
              << label << " under " << outdir << "\n";
    return 0;
}

int cmd_inspect_schmidt(const std::string& model_path, std::size_t cut) {
    const ModelSet set = load_model(model_path);
    std::cout << "schmidt spectrum at cut " << cut << "\n";
    for (const ClassModel& m : set.models) {
        const auto s = schmidt_spectrum(m.state, cut);
        std::cout << m.label << ":";
        for (double v : s) std::cout << " " << v;
        std::cout << "\n";
    }
    return 0;
}

int cmd_inspect_overlap(const std::string& model_path,
                        const std::string& images, const std::string& labels,
                        std::size_t subset) {
    const ModelSet set = load_model(model_path);
    const Dataset raw = load_idx(images, labels);
    const Dataset train = prepare_like(set, raw);
    const LocalFeatureMap map =
        LocalFeatureMap::from_id(set.models.front().map_id);

    std::cout << "mean squared overlap to the exact per-label sum\n";
    for (const ClassModel& m : set.models) {
        std::vector<ImageView> imgs;
        for (std::size_t i = 0; i < train.count(); ++i)
            if (train.labels[i] == m.label) imgs.push_back(train.image(i));
        if (subset > 0 && imgs.size() > subset) imgs.resize(subset);
        if (imgs.empty()) {
            std::cout << m.label << ": no training images\n";
            continue;
        }
        const OverlapResult r = mean_sq_overlap(m.state, map, imgs);
        std::cout << m.label << ": " << r.value << " (" << r.images_used
                  << " images" << (r.exact ? "" : ", subset estimate") << ")\n";
    }
    return 0;
}

int cmd_smooth(const std::string& map_id, double xi, std::size_t grid_points,
               const std::string& out) {
    const LocalFeatureMap map = LocalFeatureMap::from_id(map_id);
    std::vector<double> xs(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
        xs[i] = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const std::vector<Complex> psi = smooth_delta(map, xi, xs);
    export_curve(xs, psi, out);
    std::cout << "wrote " << grid_points << "-point kernel curve for "
              << map_id << " at xi=" << xi << " -> " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MPS Born machine toolkit: pre-train by sum-and-compress "
                 "reduction, classify, sample, inspect"};
    app.require_subcommand(1);

    // pretrain
    CommonPretrainFlags pf;
    auto* pretrain_cmd =
        app.add_subcommand("pretrain", "build digit wavefunctions from IDX data");
    pretrain_cmd->add_option("--train-images", pf.train_images)->required();
    pretrain_cmd->add_option("--train-labels", pf.train_labels)->required();
    pretrain_cmd->add_option("--map", pf.cfg.map_id,
                             "cos-sin | phased | indicator | sin-N");
    pretrain_cmd->add_option("--chi", pf.cfg.chi, "target bond dimension");
    pretrain_cmd->add_option("--strategy", pf.strategy, "direct | tree")
        ->check(CLI::IsMember({"direct", "tree"}));
    pretrain_cmd->add_option("--leaf-batch", pf.cfg.leaf_batch,
                             "images per exact leaf (0 = chi)");
    pretrain_cmd->add_option("--sweeps", pf.cfg.sweeps,
                             "variational polish sweeps per reduction");
    pretrain_cmd->add_option("--tol", pf.cfg.tol, "sweep convergence tolerance");
    pretrain_cmd->add_option("--downscale", pf.cfg.downscale,
                             "mean-pool factor");
    pretrain_cmd->add_option("--binarize", pf.binarize,
                             "threshold in [0,1]; negative disables");
    pretrain_cmd->add_option("--order", pf.order, "raster | snake")
        ->check(CLI::IsMember({"raster", "snake"}));
    pretrain_cmd->add_option("--workers", pf.cfg.workers,
                             "max concurrent reduce tasks");
    pretrain_cmd->add_option("--seed", pf.cfg.seed, "plan seed");
    pretrain_cmd->add_option("--out", pf.out, "output model path");

    // classify
    std::string cl_model, cl_images, cl_labels, cl_metrics;
    int cl_workers = 1;
    auto* classify_cmd =
        app.add_subcommand("classify", "evaluate accuracy on a test set");
    classify_cmd->add_option("--model", cl_model)->required();
    classify_cmd->add_option("--test-images", cl_images)->required();
    classify_cmd->add_option("--test-labels", cl_labels)->required();
    classify_cmd->add_option("--metrics", cl_metrics, "CSV output path");
    classify_cmd->add_option("--workers", cl_workers);

    // sample
    std::string sm_model, sm_mode = "binary", sm_grey_map = "phased",
                sm_outdir = "samples";
    int sm_label = 0;
    std::size_t sm_count = 5;
    std::uint64_t sm_seed = 0;
    auto* sample_cmd =
        app.add_subcommand("sample", "draw images from a digit wavefunction");
    sample_cmd->add_option("--model", sm_model)->required();
    sample_cmd->add_option("--label", sm_label)->required();
    sample_cmd->add_option("--count", sm_count);
    sample_cmd->add_option("--mode", sm_mode)
        ->check(CLI::IsMember({"binary", "grey"}));
    sample_cmd->add_option("--grey-map", sm_grey_map,
                           "orthonormal map for the grey stage");
    sample_cmd->add_option("--seed", sm_seed);
    sample_cmd->add_option("--outdir", sm_outdir);

    // inspect
    std::string in_model, in_images, in_labels;
    std::size_t in_cut = 0, in_subset = 0;
    bool in_overlap = false;
    auto* inspect_cmd =
        app.add_subcommand("inspect", "schmidt spectra or training overlap");
    inspect_cmd->add_option("--model", in_model)->required();
    auto* cut_opt = inspect_cmd->add_option("--schmidt", in_cut, "bond index");
    inspect_cmd->add_flag("--overlap", in_overlap);
    inspect_cmd->add_option("--train-images", in_images);
    inspect_cmd->add_option("--train-labels", in_labels);
    inspect_cmd->add_option("--subset", in_subset,
                            "cap on images per label (0 = all)");

    // smooth
    std::string sd_map = "phased", sd_out = "curve.csv";
    double sd_xi = 0.5;
    std::size_t sd_grid = 1000;
    auto* smooth_cmd = app.add_subcommand(
        "smooth", "delta-smoothing kernel of a feature map on a grid");
    smooth_cmd->add_option("--map", sd_map);
    smooth_cmd->add_option("--xi", sd_xi)->check(CLI::Range(0.0, 1.0));
    smooth_cmd->add_option("--grid", sd_grid)->check(CLI::Range(2, 1 << 20));
    smooth_cmd->add_option("--out", sd_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (pretrain_cmd->parsed()) return cmd_pretrain(pf);
        if (classify_cmd->parsed())
            return cmd_classify(cl_model, cl_images, cl_labels, cl_metrics,
                                cl_workers);
        if (sample_cmd->parsed())
            return cmd_sample(sm_model, sm_label, sm_count, sm_mode,
                              sm_grey_map, sm_seed, sm_outdir);
        if (inspect_cmd->parsed()) {
            if (in_overlap)
                return cmd_inspect_overlap(in_model, in_images, in_labels,
                                           in_subset);
            if (cut_opt->count() == 0)
                throw DomainError("inspect needs --schmidt CUT or --overlap");
            return cmd_inspect_schmidt(in_model, in_cut);
        }
        if (smooth_cmd->parsed()) return cmd_smooth(sd_map, sd_xi, sd_grid, sd_out);
    } catch (const FormatError& e) {
        std::cerr << "mpsr: format error: " << e.what() << "\n";
        return 2;
    } catch (const CapacityError& e) {
        std::cerr << "mpsr: capacity error: " << e.what() << "\n";
        return 3;
    } catch (const ContractViolation& e) {
        std::cerr << "mpsr: contract violation: " << e.what() << "\n";
        return 4;
    } catch (const DimensionError& e) {
        std::cerr << "mpsr: contract violation: " << e.what() << "\n";
        return 4;
    } catch (const DomainError& e) {
        std::cerr << "mpsr: contract violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "mpsr: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
