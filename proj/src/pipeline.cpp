#include "mpsr/pipeline.hpp"

#include <algorithm>
#include <map>

#include "mpsr/errors.hpp"

namespace mpsr {

ReductionPlan RunConfig::plan() const {
    ReductionPlan p;
    p.chi = chi;
    p.strategy = strategy;
    p.leaf_batch = leaf_batch;
    p.sweeps = sweeps;
    p.tol = tol;
    p.seed = seed;
    p.worker_limit = workers;
    return p;
}

PreprocessOptions RunConfig::preprocess_options() const {
    return {downscale, binarize, order};
}

ModelSet pretrain(const Dataset& raw_train, const RunConfig& cfg) {
    const Dataset train = preprocess(raw_train, cfg.preprocess_options());
    const LocalFeatureMap map = LocalFeatureMap::from_id(cfg.map_id);
    const ReductionPlan plan = cfg.plan();

    std::map<int, std::vector<ImageView>> by_label;
    for (std::size_t i = 0; i < train.count(); ++i)
        by_label[train.labels[i]].push_back(train.image(i));

    ModelSet set;
    set.height = train.height;
    set.width = train.width;
    for (const auto& [label, images] : by_label) {
        MPS state = cfg.strategy == Strategy::tree
                        ? tree_reduce(map, images, plan)
                        : direct_sum_compress(map, images, plan);
        ClassModel m;
        m.label = label;
        m.log_cnorm = state.log_scale();
        state.set_log_scale(0.0);
        m.state = std::move(state);
        m.map_id = cfg.map_id;
        m.chi = cfg.chi;
        m.pixel_order = cfg.order;
        set.models.push_back(std::move(m));
    }
    set.validate();
    return set;
}

Dataset prepare_like(const ModelSet& set, const Dataset& raw) {
    set.validate();
    if (set.height == 0 || raw.height % set.height != 0 ||
        raw.width % (set.width == 0 ? 1 : set.width) != 0)
        throw DimensionError("test images cannot be downscaled to the model "
                             "resolution " +
                             std::to_string(set.height) + "x" +
                             std::to_string(set.width));
    const unsigned factor =
        static_cast<unsigned>(raw.height / set.height);
    if (raw.width / set.width != factor)
        throw DimensionError("non-uniform downscale between axes");
    PreprocessOptions opts;
    opts.downscale = factor;
    opts.order = set.models.front().pixel_order;
    return preprocess(raw, opts);
}

AccuracyReport classify_dataset(const ModelSet& set, const Dataset& raw_test,
                                int workers) {
    const Dataset test = prepare_like(set, raw_test);
    return evaluate_accuracy(set, test, workers);
}

} // namespace mpsr
