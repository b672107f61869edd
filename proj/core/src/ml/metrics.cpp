#include "gridstab/ml/metrics.hpp"

#include "gridstab/csv.hpp"
#include "gridstab/error.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace gridstab::ml {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw DimensionError("prediction and target lengths differ (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
    if (a.empty()) {
        throw ConfigError("cannot evaluate an empty set");
    }
}

}  // namespace

double mse(std::span<const double> prediction, std::span<const double> target)
{
    check_lengths(prediction, target);
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = prediction[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(target.size());
}

double r2_score(std::span<const double> prediction, std::span<const double> target)
{
    check_lengths(prediction, target);
    double mean = 0.0;
    for (const double y : target) {
        mean += y;
    }
    mean /= static_cast<double>(target.size());
    double null_sum = 0.0;
    double model_sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        null_sum += (mean - target[i]) * (mean - target[i]);
        model_sum += (prediction[i] - target[i]) * (prediction[i] - target[i]);
    }
    if (null_sum == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return 1.0 - model_sum / null_sum;
}

Confusion confusion(std::span<const double> predicted_labels, std::span<const double> true_labels)
{
    check_lengths(predicted_labels, true_labels);
    Confusion c;
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
        const bool p = predicted_labels[i] >= 0.5;
        const bool t = true_labels[i] >= 0.5;
        if (p && t) {
            ++c.tp;
        } else if (p) {
            ++c.fp;
        } else if (t) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

double precision(const Confusion& c)
{
    return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const Confusion& c)
{
    return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f_beta(const Confusion& c, double beta)
{
    const double p = precision(c);
    const double r = recall(c);
    const double b2 = beta * beta;
    const double denom = b2 * p + r;
    return denom == 0.0 ? 0.0 : (1.0 + b2) * p * r / denom;
}

std::vector<double> threshold_regression_to_tm(std::span<const double> predicted_mfd, double beta)
{
    if (!(beta > 0.0)) {
        throw ConfigError("threshold beta must be positive");
    }
    std::vector<double> labels;
    labels.reserve(predicted_mfd.size());
    for (const double v : predicted_mfd) {
        labels.push_back(v >= beta ? 1.0 : 0.0);
    }
    return labels;
}

std::string report_to_json(const EvalReport& report)
{
    using nlohmann::json;
    const auto number = [](std::optional<double> v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); };
    json doc{
        {"target", report.target},
        {"model", report.model},
        {"grids", report.grids},
        {"nodes", report.nodes},
        {"mse", number(report.mse)},
        {"r2", number(report.r2)},
        {"precision", number(report.precision)},
        {"recall", number(report.recall)},
        {"f_beta", number(report.f_beta)},
        {"beta_f", 2.0},
    };
    if (report.confusion) {
        doc["confusion"] = {{"tp", report.confusion->tp},
                            {"fp", report.confusion->fp},
                            {"fn", report.confusion->fn},
                            {"tn", report.confusion->tn}};
    } else {
        doc["confusion"] = nullptr;
    }
    return doc.dump(2) + "\n";
}

std::string predictions_to_csv(std::span<const NodePrediction> predictions)
{
    std::ostringstream out;
    out << "grid_id,node,target,prediction\n";
    for (const auto& p : predictions) {
        out << p.grid_id << ',' << p.node << ',' << format_double(p.target) << ',' << format_double(p.prediction)
            << '\n';
    }
    return out.str();
}

}  // namespace gridstab::ml
