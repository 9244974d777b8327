#pragma once

// One experiment run end to end: data, ARL training, post-hoc adversary.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "arl/arl.hpp"
#include "arl/config.hpp"
#include "arl/datasets.hpp"
#include "arl/eval.hpp"

namespace arl {

struct ExperimentData {
    data::Dataset train;
    data::Dataset test;
};

[[nodiscard]] inline ExperimentData load_experiment_data(const ExperimentConfig& cfg)
{
    const auto& ds = cfg.dataset;
    ExperimentData out;
    if (ds.kind == DatasetKind::mixture) {
        data::MixtureConfig mc = ds.mixture;
        mc.seed = cfg.data_seed();
        auto [tr, te] = data::split(data::gen_mixture(mc), ds.split, cfg.split_seed());
        out.train = std::move(tr);
        out.test = std::move(te);
        return out;
    }
    data::Schema schema;
    try {
        schema = data::read_schema(ds.schema);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("dataset.schema: ") + e.what());
    }
    data::PreparedData p = ds.path.empty() ? data::load_csv_train_test(ds.train_path, ds.test_path, schema)
                                           : data::load_csv_split(ds.path, schema, ds.split, cfg.split_seed());
    out.train = std::move(p.train);
    out.test = std::move(p.test);
    return out;
}

/// ArlConfig with class counts taken from the data.
[[nodiscard]] inline ArlConfig effective_arl(const ExperimentConfig& cfg, const ExperimentData& d)
{
    ArlConfig a = cfg.arl;
    a.n_classes = std::max(d.train.n_classes, d.test.n_classes);
    a.m_classes = std::max(d.train.m_classes, d.test.m_classes);
    return a;
}

[[nodiscard]] inline AdversarySpec effective_adversary(const ExperimentConfig& cfg)
{
    AdversarySpec spec = cfg.adversary;
    spec.fit.seed = derive_seed(cfg.arl.seed, 900);
    return spec;
}

/// Trade-off row: target accuracy of the frozen T o E and the adversary's
/// accuracy and mean entropy, all on the test split.
[[nodiscard]] inline eval::TradeoffPoint tradeoff_point(const ExperimentConfig& cfg, const Players& players,
                                                        const ExperimentData& d, AdversaryResult* detail = nullptr)
{
    AdversaryResult adv = train_adversary(players.encoder, effective_adversary(cfg), d.train, d.test);
    eval::TradeoffPoint p;
    p.target_acc = target_accuracy(players, d.test);
    p.adv_acc = adv.test_accuracy;
    p.adv_entropy = adv.test_entropy;
    p.variant = to_string(cfg.arl.variant);
    p.alpha = cfg.arl.alpha;
    p.seed = cfg.arl.seed;
    if (detail) *detail = std::move(adv);
    return p;
}

} // namespace arl
