#include "gridstab/ml/model.hpp"

#include "gridstab/error.hpp"
#include "gridstab/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gridstab::ml {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::string_view, N>& names, const char* what)
{
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == text) {
            return static_cast<Enum>(i);
        }
    }
    throw ConfigError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::string_view, 4> kKindNames{"linreg", "logreg", "mlp", "gcn"};
constexpr std::array<std::string_view, 5> kActivationNames{"identity", "relu", "tanh", "sigmoid", "softplus"};
constexpr std::array<std::string_view, 4> kHeadNames{"identity", "sigmoid", "softplus", "logit"};

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

}  // namespace

std::string_view to_string(ModelKind kind)
{
    return kKindNames[static_cast<std::size_t>(kind)];
}

std::string_view to_string(Activation activation)
{
    return kActivationNames[static_cast<std::size_t>(activation)];
}

std::string_view to_string(Head head)
{
    return kHeadNames[static_cast<std::size_t>(head)];
}

ModelKind parse_model_kind(std::string_view text)
{
    return parse_enum<ModelKind>(text, kKindNames, "model kind");
}

Activation parse_activation(std::string_view text)
{
    return parse_enum<Activation>(text, kActivationNames, "activation");
}

Head parse_head(std::string_view text)
{
    return parse_enum<Head>(text, kHeadNames, "output head");
}

Eigen::Index Model::input_dim() const
{
    return layers.empty() ? 0 : layers.front().weight.rows();
}

Eigen::Index Model::output_dim() const
{
    return layers.empty() ? 0 : layers.back().weight.cols();
}

std::size_t Model::parameter_count() const
{
    std::size_t count = 0;
    for (const auto& layer : layers) {
        count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    }
    return count;
}

std::vector<double> Model::parameters() const
{
    std::vector<double> values;
    values.reserve(parameter_count());
    for (const auto& layer : layers) {
        values.insert(values.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
        values.insert(values.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
    }
    return values;
}

void Model::set_parameters(std::span<const double> values)
{
    if (values.size() != parameter_count()) {
        throw DimensionError("expected " + std::to_string(parameter_count()) + " parameters, got " +
                             std::to_string(values.size()));
    }
    std::size_t offset = 0;
    for (auto& layer : layers) {
        std::copy_n(values.data() + offset, layer.weight.size(), layer.weight.data());
        offset += static_cast<std::size_t>(layer.weight.size());
        std::copy_n(values.data() + offset, layer.bias.size(), layer.bias.data());
        offset += static_cast<std::size_t>(layer.bias.size());
    }
}

void Model::validate() const
{
    if (layers.empty()) {
        throw DimensionError("model has no layers");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].bias.size() != layers[l].weight.cols()) {
            throw DimensionError("layer " + std::to_string(l) + ": bias length does not match output width");
        }
        if (l > 0 && layers[l].weight.rows() != layers[l - 1].weight.cols()) {
            throw DimensionError("layer " + std::to_string(l) + ": input width does not match previous layer");
        }
    }
}

Model make_model(const ModelSpec& spec)
{
    if (spec.input_dim < 1) {
        throw ConfigError("model input dimension must be positive");
    }
    std::vector<Eigen::Index> widths{spec.input_dim};
    if (spec.kind == ModelKind::mlp || spec.kind == ModelKind::gcn) {
        for (const auto h : spec.hidden) {
            if (h < 1) {
                throw ConfigError("hidden layer widths must be positive");
            }
            widths.push_back(h);
        }
    }
    widths.push_back(1);

    Model model;
    model.kind = spec.kind;
    model.head = spec.head;
    rng::CounterStream stream(spec.seed, 0x6d6f64656c);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        const Eigen::Index in = widths[l];
        const Eigen::Index out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        layer.weight.resize(in, out);
        for (Eigen::Index c = 0; c < out; ++c) {
            for (Eigen::Index r = 0; r < in; ++r) {
                layer.weight(r, c) = stream.uniform(-limit, limit);
            }
        }
        layer.bias = Eigen::RowVectorXd::Zero(out);
        layer.activation = l + 2 == widths.size() ? Activation::identity : spec.hidden_activation;
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Eigen::SparseMatrix<double> normalized_adjacency(const PowerGrid& grid)
{
    const auto n = static_cast<Eigen::Index>(grid.size());
    std::vector<double> degree(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        degree[i] = static_cast<double>(grid.degree(i) + 1);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(grid.size() + 2 * grid.edge_count());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        triplets.emplace_back(row, row, 1.0 / degree[i]);
        for (const auto j : grid.neighbors(i)) {
            triplets.emplace_back(row, static_cast<Eigen::Index>(j), 1.0 / std::sqrt(degree[i] * degree[j]));
        }
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
}

Eigen::MatrixXd activate(Activation activation, const Eigen::MatrixXd& z)
{
    switch (activation) {
    case Activation::identity:
        return z;
    case Activation::relu:
        return z.cwiseMax(0.0);
    case Activation::tanh:
        return z.array().tanh().matrix();
    case Activation::sigmoid:
        return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::softplus:
        return z.unaryExpr([](double v) { return softplus(v); });
    }
    return z;
}

Eigen::MatrixXd activate_derivative(Activation activation, const Eigen::MatrixXd& z, const Eigen::MatrixXd& out)
{
    switch (activation) {
    case Activation::identity:
        return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::relu:
        return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::tanh:
        return (1.0 - out.array().square()).matrix();
    case Activation::sigmoid:
        return (out.array() * (1.0 - out.array())).matrix();
    case Activation::softplus:
        return z.unaryExpr([](double v) { return sigmoid(v); });
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

Eigen::VectorXd apply_head(Head head, const Eigen::VectorXd& raw)
{
    switch (head) {
    case Head::identity:
        return raw;
    case Head::sigmoid:
    case Head::logit:
        return raw.unaryExpr([](double v) { return sigmoid(v); });
    case Head::softplus:
        return raw.unaryExpr([](double v) { return softplus(v); });
    }
    return raw;
}

namespace {

// S H with each entry summed in ascending order of its terms, so relabelling
// the nodes permutes the result bit for bit. S must be symmetric.
Eigen::MatrixXd propagate(const Eigen::SparseMatrix<double>& s, const Eigen::MatrixXd& h)
{
    Eigen::MatrixXd out(h.rows(), h.cols());
    std::vector<double> terms;
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        for (Eigen::Index i = 0; i < s.outerSize(); ++i) {
            terms.clear();
            for (Eigen::SparseMatrix<double>::InnerIterator it(s, i); it; ++it) {
                terms.push_back(it.value() * h(it.index(), k));
            }
            std::sort(terms.begin(), terms.end());
            double sum = 0.0;
            for (const double t : terms) {
                sum += t;
            }
            out(i, k) = sum;
        }
    }
    return out;
}

// H W one row at a time, so every row goes through the same kernel.
Eigen::MatrixXd rowwise_product(const Eigen::MatrixXd& h, const Eigen::MatrixXd& w)
{
    Eigen::MatrixXd out(h.rows(), w.cols());
    Eigen::RowVectorXd row(h.cols());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        row = h.row(i);
        out.row(i).noalias() = row * w;
    }
    return out;
}

ForwardCache run_forward(const Model& model, const Eigen::SparseMatrix<double>* adjacency, const Eigen::MatrixXd& x)
{
    model.validate();
    if (x.cols() != model.input_dim()) {
        throw DimensionError("input has " + std::to_string(x.cols()) + " features, model expects " +
                             std::to_string(model.input_dim()));
    }
    ForwardCache cache;
    const Eigen::MatrixXd* h = &x;
    for (const auto& layer : model.layers) {
        cache.propagated.push_back(adjacency ? propagate(*adjacency, *h) : *h);
        Eigen::MatrixXd z = rowwise_product(cache.propagated.back(), layer.weight);
        z.rowwise() += layer.bias;
        cache.outputs.push_back(activate(layer.activation, z));
        cache.pre.push_back(std::move(z));
        h = &cache.outputs.back();
    }
    return cache;
}

}  // namespace

ForwardCache forward(const Model& model, const Eigen::MatrixXd& x)
{
    return run_forward(model, nullptr, x);
}

ForwardCache gcn_forward(const Model& model, const Eigen::SparseMatrix<double>& adjacency, const Eigen::MatrixXd& x)
{
    if (adjacency.rows() != x.rows() || adjacency.cols() != x.rows()) {
        throw DimensionError("feature matrix has " + std::to_string(x.rows()) + " rows for a graph with " +
                             std::to_string(adjacency.rows()) + " nodes");
    }
    return run_forward(model, &adjacency, x);
}

ForwardCache gcn_forward(const Model& model, const PowerGrid& grid, const Eigen::MatrixXd& x)
{
    return gcn_forward(model, normalized_adjacency(grid), x);
}

std::vector<double> backward(const Model& model, const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                             const Eigen::SparseMatrix<double>* adjacency)
{
    const std::size_t depth = model.layers.size();
    if (cache.outputs.size() != depth || output_grad.rows() != cache.outputs.back().rows() ||
        output_grad.cols() != cache.outputs.back().cols()) {
        throw DimensionError("gradient shape does not match the forward pass");
    }
    std::vector<Eigen::MatrixXd> weight_grads(depth);
    std::vector<Eigen::RowVectorXd> bias_grads(depth);
    Eigen::MatrixXd grad = output_grad;
    for (std::size_t l = depth; l-- > 0;) {
        const Layer& layer = model.layers[l];
        const Eigen::MatrixXd g_pre =
            (grad.array() * activate_derivative(layer.activation, cache.pre[l], cache.outputs[l]).array()).matrix();
        weight_grads[l] = cache.propagated[l].transpose() * g_pre;
        bias_grads[l] = g_pre.colwise().sum();
        if (l > 0) {
            grad = g_pre * layer.weight.transpose();
            if (adjacency) {
                // The normalized adjacency is symmetric.
                grad = Eigen::MatrixXd(*adjacency * grad);
            }
        }
    }
    std::vector<double> flat;
    flat.reserve(model.parameter_count());
    for (std::size_t l = 0; l < depth; ++l) {
        flat.insert(flat.end(), weight_grads[l].data(), weight_grads[l].data() + weight_grads[l].size());
        flat.insert(flat.end(), bias_grads[l].data(), bias_grads[l].data() + bias_grads[l].size());
    }
    return flat;
}

}  // namespace gridstab::ml
