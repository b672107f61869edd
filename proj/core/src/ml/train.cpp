#include "gridstab/ml/train.hpp"

#include "gridstab/error.hpp"
#include "gridstab/parallel.hpp"
#include "gridstab/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace gridstab::ml {

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw ConfigError("momentum must lie in [0, 1)");
    }
    if (batch_size == 0) {
        throw ConfigError("batch size must be at least 1");
    }
    if (epochs == 0) {
        throw ConfigError("epochs must be at least 1");
    }
    if (!(pos_weight >= 0.0)) {
        throw ConfigError("pos_weight must be nonnegative");
    }
}

namespace {

double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z)
{
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void check_head(const Model& model, Loss loss)
{
    if ((loss == Loss::weighted_bce) != (model.head == Head::logit)) {
        throw ConfigError("the cross-entropy loss requires a logit head and vice versa");
    }
    if (model.output_dim() != 1) {
        throw DimensionError("training needs a single output unit");
    }
}

const Eigen::SparseMatrix<double>* adjacency_of(const Model& model, const GraphSample& sample)
{
    return model.kind == ModelKind::gcn ? &sample.adjacency : nullptr;
}

// Sum over nodes of the per-node loss, and d(sum)/d(raw output).
double node_losses(Head head, Loss loss, double pos_weight, const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                   Eigen::MatrixXd* grad)
{
    double total = 0.0;
    if (grad) {
        grad->resize(z.size(), 1);
    }
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        double value = 0.0;
        double dz = 0.0;
        if (loss == Loss::weighted_bce) {
            const double w = y[i] * pos_weight;
            value = w * softplus(-z[i]) + (1.0 - y[i]) * softplus(z[i]);
            dz = -w * sigmoid(-z[i]) + (1.0 - y[i]) * sigmoid(z[i]);
        } else {
            double pred = z[i];
            double dpred = 1.0;
            if (head == Head::sigmoid) {
                pred = sigmoid(z[i]);
                dpred = pred * (1.0 - pred);
            } else if (head == Head::softplus) {
                pred = softplus(z[i]);
                dpred = sigmoid(z[i]);
            }
            const double r = pred - y[i];
            value = r * r;
            dz = 2.0 * r * dpred;
        }
        total += value;
        if (grad) {
            (*grad)(i, 0) = dz;
        }
    }
    return total;
}

}  // namespace

Eigen::MatrixXd raw_output(const Model& model, const GraphSample& sample)
{
    const ForwardCache cache = model.kind == ModelKind::gcn ? gcn_forward(model, sample.adjacency, sample.x)
                                                            : forward(model, sample.x);
    return cache.outputs.back();
}

Eigen::VectorXd predict(const Model& model, const GraphSample& sample)
{
    return apply_head(model.head, raw_output(model, sample).col(0));
}

double dataset_loss(const Model& model, std::span<const GraphSample> samples, Loss loss, double pos_weight)
{
    check_head(model, loss);
    double total = 0.0;
    double nodes = 0.0;
    for (const auto& s : samples) {
        total += node_losses(model.head, loss, pos_weight, raw_output(model, s).col(0), s.y, nullptr);
        nodes += static_cast<double>(s.y.size());
    }
    return nodes > 0.0 ? total / nodes : 0.0;
}

LossGradient loss_and_gradient(const Model& model, std::span<const GraphSample> samples,
                               std::span<const std::size_t> batch, Loss loss, double pos_weight, unsigned workers)
{
    check_head(model, loss);
    std::vector<std::vector<double>> grads(batch.size());
    std::vector<double> losses(batch.size());
    parallel_for(batch.size(), workers, [&](std::size_t k) {
        const GraphSample& s = samples[batch[k]];
        if (s.y.size() != s.x.rows()) {
            throw DimensionError("grid " + std::to_string(s.grid_id) + ": target length differs from node count");
        }
        const auto* adjacency = adjacency_of(model, s);
        const ForwardCache cache = adjacency ? gcn_forward(model, *adjacency, s.x) : forward(model, s.x);
        Eigen::MatrixXd dz;
        losses[k] = node_losses(model.head, loss, pos_weight, cache.outputs.back().col(0), s.y, &dz);
        grads[k] = backward(model, cache, dz, adjacency);
    });
    double nodes = 0.0;
    for (const auto index : batch) {
        nodes += static_cast<double>(samples[index].y.size());
    }
    LossGradient result;
    result.gradient.assign(model.parameter_count(), 0.0);
    for (std::size_t k = 0; k < batch.size(); ++k) {
        result.loss += losses[k];
        for (std::size_t p = 0; p < result.gradient.size(); ++p) {
            result.gradient[p] += grads[k][p];
        }
    }
    if (nodes > 0.0) {
        result.loss /= nodes;
        for (auto& g : result.gradient) {
            g /= nodes;
        }
    }
    return result;
}

double balanced_pos_weight(std::span<const GraphSample> samples)
{
    double positives = 0.0;
    double negatives = 0.0;
    for (const auto& s : samples) {
        for (Eigen::Index i = 0; i < s.y.size(); ++i) {
            (s.y[i] >= 0.5 ? positives : negatives) += 1.0;
        }
    }
    return positives > 0.0 && negatives > 0.0 ? negatives / positives : 1.0;
}

TrainHistory fit(Model& model, std::span<const GraphSample> train, std::span<const GraphSample> validation,
                 const TrainConfig& cfg)
{
    cfg.validate();
    model.validate();
    check_head(model, cfg.loss);
    if (train.empty()) {
        throw ConfigError("training set is empty");
    }
    TrainHistory history;
    history.pos_weight =
        cfg.loss == Loss::weighted_bce ? (cfg.pos_weight > 0.0 ? cfg.pos_weight : balanced_pos_weight(train)) : 1.0;

    if (cfg.closed_form) {
        fit_linear_closed_form(model, train);
        history.train_loss.push_back(dataset_loss(model, train, cfg.loss, history.pos_weight));
        history.val_loss.push_back(validation.empty() ? history.train_loss.back()
                                                      : dataset_loss(model, validation, cfg.loss, history.pos_weight));
        history.best_val_loss = history.val_loss.back();
        return history;
    }

    const auto monitor = [&]() {
        return validation.empty() ? dataset_loss(model, train, cfg.loss, history.pos_weight)
                                  : dataset_loss(model, validation, cfg.loss, history.pos_weight);
    };

    std::vector<double> params = model.parameters();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> best = params;
    history.best_val_loss = monitor();
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng::CounterStream stream(cfg.seed, epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[stream.below(i)]);
        }
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, stop - start);
            const LossGradient lg = loss_and_gradient(model, train, batch, cfg.loss, history.pos_weight, cfg.workers);
            if (!std::isfinite(lg.loss)) {
                std::ostringstream msg;
                msg << "training diverged: nonfinite loss at epoch " << epoch << ", batch starting at " << start
                    << " (learning rate " << cfg.learning_rate << ", last train loss "
                    << (history.train_loss.empty() ? std::nan("") : history.train_loss.back()) << ")";
                throw TrainingError(msg.str());
            }
            for (std::size_t p = 0; p < params.size(); ++p) {
                velocity[p] = cfg.momentum * velocity[p] + lg.gradient[p];
                params[p] -= cfg.learning_rate * velocity[p];
            }
            model.set_parameters(params);
        }
        const double train_loss = dataset_loss(model, train, cfg.loss, history.pos_weight);
        const double val_loss = validation.empty() ? train_loss : monitor();
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw TrainingError("training diverged: nonfinite loss after epoch " + std::to_string(epoch));
        }
        history.train_loss.push_back(train_loss);
        history.val_loss.push_back(val_loss);
        if (val_loss < history.best_val_loss) {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best = params;
            since_best = 0;
        } else if (++since_best >= cfg.patience && cfg.patience > 0) {
            history.stopped_early = true;
            break;
        }
    }
    model.set_parameters(best);
    return history;
}

void fit_linear_closed_form(Model& model, std::span<const GraphSample> train)
{
    if (model.kind != ModelKind::linreg || model.layers.size() != 1 || model.head != Head::identity) {
        throw ConfigError("closed-form fitting applies to linreg models with an identity head only");
    }
    const Eigen::Index d = model.input_dim();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d + 1, d + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
    for (const auto& s : train) {
        if (s.x.cols() != d || s.y.size() != s.x.rows()) {
            throw DimensionError("grid " + std::to_string(s.grid_id) + ": input shape does not match the model");
        }
        Eigen::MatrixXd a(s.x.rows(), d + 1);
        a.leftCols(d) = s.x;
        a.col(d).setOnes();
        gram.noalias() += a.transpose() * a;
        rhs.noalias() += a.transpose() * s.y;
    }
    const Eigen::VectorXd theta = gram.completeOrthogonalDecomposition().solve(rhs);
    model.layers[0].weight.col(0) = theta.head(d);
    model.layers[0].bias(0) = theta(d);
}

}  // namespace gridstab::ml
