#include "gridstab/ml/pipeline.hpp"

#include "gridstab/error.hpp"

#include <algorithm>

namespace gridstab::ml {

std::string_view to_string(Target target)
{
    switch (target) {
    case Target::snbs:
        return "snbs";
    case Target::mfd:
        return "mfd";
    case Target::tm:
        return "tm";
    }
    return "snbs";
}

Target parse_target(std::string_view text)
{
    if (text == "snbs") {
        return Target::snbs;
    }
    if (text == "mfd") {
        return Target::mfd;
    }
    if (text == "tm") {
        return Target::tm;
    }
    throw ConfigError("unknown target '" + std::string(text) + "' (expected snbs, mfd or tm)");
}

std::vector<double> target_values(std::span<const NodeStats> stats, Target target)
{
    std::vector<double> values;
    values.reserve(stats.size());
    for (const auto& s : stats) {
        switch (target) {
        case Target::snbs:
            values.push_back(s.snbs);
            break;
        case Target::mfd:
            values.push_back(s.mfd_max);
            break;
        case Target::tm:
            values.push_back(s.tm ? 1.0 : 0.0);
            break;
        }
    }
    return values;
}

Head head_for(ModelKind kind, Target target)
{
    if (kind == ModelKind::linreg) {
        if (target == Target::tm) {
            throw ConfigError("linreg predicts regression targets; use logreg for tm");
        }
        return Head::identity;
    }
    if (kind == ModelKind::logreg && target != Target::tm) {
        throw ConfigError("logreg predicts the tm class; use linreg for regression targets");
    }
    switch (target) {
    case Target::snbs:
        return Head::sigmoid;
    case Target::mfd:
        return Head::softplus;
    case Target::tm:
        return Head::logit;
    }
    return Head::identity;
}

Loss loss_for(Target target)
{
    return target == Target::tm ? Loss::weighted_bce : Loss::mse;
}

namespace {

bool uses_features(ModelKind kind)
{
    return kind != ModelKind::gcn;
}

Eigen::Index input_dim_for(ModelKind kind)
{
    return uses_features(kind) ? kFeatureCount : 2;
}

}  // namespace

GraphSample make_sample(const Predictor& predictor, const PowerGrid& grid, std::uint64_t grid_id,
                        std::span<const double> targets, const FeatureScaler* scaler)
{
    if (targets.size() != grid.size()) {
        throw DimensionError("grid " + std::to_string(grid_id) + ": " + std::to_string(targets.size()) +
                             " targets for " + std::to_string(grid.size()) + " nodes");
    }
    GraphSample sample;
    sample.grid_id = grid_id;
    sample.y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (uses_features(predictor.model.kind)) {
        if (!scaler) {
            throw ConfigError("feature models need a feature scaler");
        }
        sample.x = scaler->apply(node_features(grid));
    } else {
        sample.x.resize(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            sample.x(i, 0) = grid.injections()[static_cast<std::size_t>(i)];
            sample.x(i, 1) = 1.0;
        }
        sample.adjacency = normalized_adjacency(grid);
    }
    return sample;
}

TrainOutcome train_predictor(const std::filesystem::path& dataset_dir, const PredictorSpec& spec,
                             const TrainConfig& cfg)
{
    const DatasetManifest manifest = load_manifest(dataset_dir);
    if (!manifest.complete || manifest.split.train.empty()) {
        throw ConfigError("dataset in " + dataset_dir.string() + " is incomplete or has no split");
    }
    const auto train = load_records(dataset_dir, manifest.split.train);
    const auto validation = load_records(dataset_dir, manifest.split.validation);
    TrainOutcome outcome = train_predictor(train, validation, spec, cfg);
    outcome.predictor.tm_beta = manifest.config.tm.beta;
    return outcome;
}

TrainOutcome train_predictor(std::span<const DatasetRecord> train, std::span<const DatasetRecord> validation,
                             const PredictorSpec& spec, const TrainConfig& cfg)
{
    if (train.empty()) {
        throw ConfigError("no training grids");
    }
    TrainOutcome outcome;
    Predictor& p = outcome.predictor;
    p.target = spec.target;
    p.hidden = spec.hidden;
    p.hidden_activation = spec.hidden_activation;
    p.train = cfg;
    p.tm_beta = spec.tm_beta;
    p.decision_threshold = spec.decision_threshold;
    p.train.loss = loss_for(spec.target);
    if (cfg.closed_form && spec.kind != ModelKind::linreg) {
        p.train.closed_form = false;
    }

    ModelSpec model_spec;
    model_spec.kind = spec.kind;
    model_spec.head = head_for(spec.kind, spec.target);
    model_spec.input_dim = input_dim_for(spec.kind);
    model_spec.hidden = spec.hidden;
    model_spec.hidden_activation = spec.hidden_activation;
    model_spec.seed = cfg.seed;
    p.model = make_model(model_spec);

    if (uses_features(spec.kind)) {
        std::vector<NodeFeatures> features;
        features.reserve(train.size());
        for (const auto& r : train) {
            features.push_back(node_features(r.grid));
        }
        p.scaler = fit_scaler(features);
    }
    const FeatureScaler* scaler = p.scaler ? &*p.scaler : nullptr;
    const auto build = [&](std::span<const DatasetRecord> records) {
        std::vector<GraphSample> samples;
        samples.reserve(records.size());
        for (const auto& r : records) {
            samples.push_back(make_sample(p, r.grid, r.grid_id, target_values(r.stats, spec.target), scaler));
        }
        return samples;
    };
    const auto train_samples = build(train);
    const auto val_samples = build(validation);
    outcome.history = fit(p.model, train_samples, val_samples, p.train);
    p.train.pos_weight = outcome.history.pos_weight;
    return outcome;
}

EvalReport evaluate_predictor(const Predictor& predictor, std::span<const DatasetRecord> records)
{
    if (records.empty()) {
        throw ConfigError("evaluation set is empty");
    }
    std::optional<FeatureScaler> local;
    const FeatureScaler* scaler = nullptr;
    if (uses_features(predictor.model.kind)) {
        if (!predictor.scaler) {
            throw SchemaError("feature model checkpoint has no scaler");
        }
        const std::size_t n = records.front().grid.size();
        const bool same_size = std::all_of(records.begin(), records.end(),
                                           [&](const DatasetRecord& r) { return r.grid.size() == n; });
        if (same_size && !predictor.scaler->pooled && predictor.scaler->node_count() == n) {
            scaler = &*predictor.scaler;
        } else {
            std::vector<NodeFeatures> features;
            for (const auto& r : records) {
                features.push_back(node_features(r.grid));
            }
            local = same_size && records.size() >= 2 ? fit_scaler(features) : fit_pooled_scaler(features);
            scaler = &*local;
        }
    }

    EvalReport report;
    report.target = std::string(to_string(predictor.target));
    report.model = std::string(to_string(predictor.model.kind));
    report.grids = records.size();
    std::vector<double> predictions;
    std::vector<double> targets;
    std::vector<double> tm_labels;
    for (const auto& r : records) {
        const auto y = target_values(r.stats, predictor.target);
        const GraphSample sample = make_sample(predictor, r.grid, r.grid_id, y, scaler);
        const Eigen::VectorXd pred = predict(predictor.model, sample);
        for (Eigen::Index i = 0; i < pred.size(); ++i) {
            const auto node = static_cast<std::size_t>(i);
            report.predictions.push_back({r.grid_id, node, y[node], pred[i]});
            predictions.push_back(pred[i]);
            targets.push_back(y[node]);
            tm_labels.push_back(r.stats[node].tm ? 1.0 : 0.0);
        }
    }
    report.nodes = predictions.size();
    report.mse = mse(predictions, targets);
    report.r2 = r2_score(predictions, targets);
    std::optional<std::vector<double>> predicted_labels;
    if (predictor.target == Target::mfd) {
        predicted_labels = threshold_regression_to_tm(predictions, predictor.tm_beta);
    } else if (predictor.target == Target::tm) {
        predicted_labels.emplace();
        for (const double prob : predictions) {
            predicted_labels->push_back(prob >= predictor.decision_threshold ? 1.0 : 0.0);
        }
    }
    if (predicted_labels) {
        const Confusion c = confusion(*predicted_labels, tm_labels);
        report.confusion = c;
        report.precision = precision(c);
        report.recall = recall(c);
        report.f_beta = f_beta(c, 2.0);
    }
    return report;
}

}  // namespace gridstab::ml
