#include "gridstab/ml/checkpoint.hpp"

#include "gridstab/csv.hpp"
#include "gridstab/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace gridstab::ml {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "gridstab-predictor";
constexpr int kVersion = 1;

std::uint64_t to_little_endian(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) {
            r = (r << 8) | ((v >> (8 * i)) & 0xff);
        }
        return r;
    } else {
        return v;
    }
}

json matrix_values(const Eigen::MatrixXd& m)
{
    json values = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            values.push_back(m(r, c));
        }
    }
    return values;
}

Eigen::MatrixXd matrix_from(const json& values, Eigen::Index rows, Eigen::Index cols)
{
    if (values.size() != static_cast<std::size_t>(rows * cols)) {
        throw SchemaError("checkpoint scaler has the wrong number of entries");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = values[k++].get<double>();
        }
    }
    return m;
}

}  // namespace

std::string serialize_predictor(const Predictor& p)
{
    p.model.validate();
    json layers = json::array();
    for (const auto& layer : p.model.layers) {
        layers.push_back({{"in", layer.weight.rows()},
                          {"out", layer.weight.cols()},
                          {"activation", to_string(layer.activation)}});
    }
    json scaler = nullptr;
    if (p.scaler) {
        scaler = {{"pooled", p.scaler->pooled},
                  {"rows", p.scaler->mean.rows()},
                  {"mean", matrix_values(p.scaler->mean)},
                  {"std", matrix_values(p.scaler->std)}};
    }
    const json header{
        {"format", kFormat},
        {"version", kVersion},
        {"kind", to_string(p.model.kind)},
        {"head", to_string(p.model.head)},
        {"target", to_string(p.target)},
        {"layers", layers},
        {"hidden", p.hidden},
        {"hidden_activation", to_string(p.hidden_activation)},
        {"train",
         {{"learning_rate", p.train.learning_rate},
          {"momentum", p.train.momentum},
          {"batch_size", p.train.batch_size},
          {"epochs", p.train.epochs},
          {"loss", p.train.loss == Loss::mse ? "mse" : "weighted_bce"},
          {"pos_weight", p.train.pos_weight},
          {"patience", p.train.patience},
          {"closed_form", p.train.closed_form}}},
        {"seed", p.train.seed},
        {"param_count", p.model.parameter_count()},
        {"tm_beta", p.tm_beta},
        {"decision_threshold", p.decision_threshold},
        {"scaler", scaler},
    };
    std::string bytes = header.dump();
    bytes.push_back('\n');
    for (const double v : p.model.parameters()) {
        const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
        char raw[8];
        std::memcpy(raw, &bits, 8);
        bytes.append(raw, 8);
    }
    return bytes;
}

Predictor deserialize_predictor(const std::string& bytes)
{
    const std::size_t newline = bytes.find('\n');
    if (newline == std::string::npos) {
        throw SchemaError("checkpoint has no header line");
    }
    Predictor p;
    std::size_t count = 0;
    try {
        const json header = json::parse(bytes.substr(0, newline));
        if (header.at("format").get<std::string>() != kFormat || header.at("version").get<int>() != kVersion) {
            throw SchemaError("unsupported checkpoint format");
        }
        p.model.kind = parse_model_kind(header.at("kind").get<std::string>());
        p.model.head = parse_head(header.at("head").get<std::string>());
        p.target = parse_target(header.at("target").get<std::string>());
        for (const auto& l : header.at("layers")) {
            Layer layer;
            layer.weight = Eigen::MatrixXd::Zero(l.at("in").get<Eigen::Index>(), l.at("out").get<Eigen::Index>());
            layer.bias = Eigen::RowVectorXd::Zero(layer.weight.cols());
            layer.activation = parse_activation(l.at("activation").get<std::string>());
            p.model.layers.push_back(std::move(layer));
        }
        p.hidden = header.at("hidden").get<std::vector<Eigen::Index>>();
        p.hidden_activation = parse_activation(header.at("hidden_activation").get<std::string>());
        const json& t = header.at("train");
        p.train.learning_rate = t.at("learning_rate").get<double>();
        p.train.momentum = t.at("momentum").get<double>();
        p.train.batch_size = t.at("batch_size").get<std::size_t>();
        p.train.epochs = t.at("epochs").get<std::size_t>();
        p.train.loss = t.at("loss").get<std::string>() == "mse" ? Loss::mse : Loss::weighted_bce;
        p.train.pos_weight = t.at("pos_weight").get<double>();
        p.train.patience = t.at("patience").get<std::size_t>();
        p.train.closed_form = t.at("closed_form").get<bool>();
        p.train.seed = header.at("seed").get<std::uint64_t>();
        p.tm_beta = header.at("tm_beta").get<double>();
        p.decision_threshold = header.at("decision_threshold").get<double>();
        count = header.at("param_count").get<std::size_t>();
        const json& s = header.at("scaler");
        if (!s.is_null()) {
            FeatureScaler scaler;
            scaler.pooled = s.at("pooled").get<bool>();
            const auto rows = s.at("rows").get<Eigen::Index>();
            scaler.mean = matrix_from(s.at("mean"), rows, kFeatureCount);
            scaler.std = matrix_from(s.at("std"), rows, kFeatureCount);
            p.scaler = std::move(scaler);
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid checkpoint header: ") + e.what());
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("invalid checkpoint header: ") + e.what());
    }
    p.model.validate();
    if (count != p.model.parameter_count()) {
        throw SchemaError("checkpoint parameter count does not match its layer shapes");
    }
    if (bytes.size() - newline - 1 != 8 * count) {
        throw SchemaError("checkpoint payload has " + std::to_string(bytes.size() - newline - 1) +
                          " bytes, expected " + std::to_string(8 * count));
    }
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, bytes.data() + newline + 1 + 8 * k, 8);
        values[k] = std::bit_cast<double>(to_little_endian(bits));
    }
    p.model.set_parameters(values);
    return p;
}

void save_predictor(const Predictor& predictor, const std::filesystem::path& path)
{
    write_file_atomic(path, serialize_predictor(predictor));
}

Predictor load_predictor(const std::filesystem::path& path)
{
    return deserialize_predictor(read_file(path));
}

}  // namespace gridstab::ml
