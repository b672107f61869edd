#include "commands.hpp"

#include "gridstab_cli/cli.hpp"

#include <gridstab/csv.hpp>
#include <gridstab/error.hpp>
#include <gridstab/ml/checkpoint.hpp>
#include <gridstab/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

namespace gridstab::cli {

namespace {

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

// Returns false (and reports) when `path` exists and overwriting is not allowed.
bool may_write(const fs::path& path, bool force, std::ostream& err)
{
    if (!force && fs::exists(path)) {
        err << "error: " << path.string() << " already exists (use --force to overwrite)\n";
        return false;
    }
    return true;
}

std::string seconds_text(double s)
{
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(s < 1.0 ? 4 : 1);
    out << s;
    return out.str();
}

// grid_<k>.json -> k; otherwise the fallback.
std::uint64_t grid_id_from_path(const fs::path& path, std::uint64_t fallback)
{
    const std::string stem = path.stem().string();
    if (stem.rfind("grid_", 0) == 0) {
        std::uint64_t id = 0;
        const char* first = stem.data() + 5;
        const char* last = stem.data() + stem.size();
        const auto [end, ec] = std::from_chars(first, last, id);
        if (ec == std::errc{} && end == last && first != last) {
            return id;
        }
    }
    return fallback;
}

}  // namespace

int cmd_generate(const GenerateOptions& o, const std::string& resolved_config, std::ostream& err)
{
    if (o.count == 0) {
        throw ConfigError("--count must be at least 1");
    }
    GrowthParams growth = o.growth;
    growth.validate();
    if (growth.n % 2 != 0) {
        throw BalanceError("cannot balance injections on an odd number of nodes (n = " + std::to_string(growth.n) +
                           ")");
    }
    ensure_dir(o.out);
    for (std::size_t k = 0; k < o.count; ++k) {
        if (!may_write(o.out / grid_file_name(k), o.force, err)) {
            return kExists;
        }
    }
    double degree_sum = 0.0;
    for (std::size_t k = 0; k < o.count; ++k) {
        growth.seed = rng::derive_seed(o.seed, 2 * k);
        const PowerGrid grid = assign_injections(generate_topology(growth), rng::derive_seed(o.seed, 2 * k + 1));
        degree_sum += 2.0 * static_cast<double>(grid.edge_count()) / static_cast<double>(grid.size());
        write_file_atomic(o.out / grid_file_name(k), grid_to_json(grid) + "\n");
    }
    write_file_atomic(o.out / "generate.conf", resolved_config);
    err << "generated " << o.count << " grids with n = " << growth.n << " in " << o.out.string()
        << "; mean degree " << format_double(degree_sum / static_cast<double>(o.count)) << '\n';
    return kOk;
}

int cmd_estimate(const EstimateOptions& o, const std::string& resolved_config, std::ostream& err)
{
    if (o.grids.empty()) {
        throw ConfigError("no grid files given");
    }
    ensure_dir(o.out);
    std::vector<fs::path> outputs;
    for (const auto& g : o.grids) {
        outputs.push_back(o.out / ("stats_" + g.stem().string() + ".csv"));
        if (!may_write(outputs.back(), o.force, err)) {
            return kExists;
        }
    }
    write_file_atomic(o.out / "estimate.conf", resolved_config);

    std::mutex log_mutex;
    std::vector<std::string> failed;
    for (std::size_t k = 0; k < o.grids.size(); ++k) {
        const fs::path& path = o.grids[k];
        const std::uint64_t grid_id = grid_id_from_path(path, k);
        const std::string name = path.stem().string();
        try {
            const PowerGrid grid = import_grid(path);
            const auto fixed_point = find_fixed_point(grid, o.swing);

            EstimationConfig cfg;
            cfg.swing = o.swing;
            cfg.integrator = o.integrator;
            cfg.tm = o.tm;
            cfg.trials = o.trials;
            cfg.master_seed = o.seed;
            cfg.grid_id = grid_id;
            cfg.workers = o.workers;
            cfg.certified_exit = !o.no_certificate;
            std::atomic<std::size_t> trials{0};
            cfg.on_trial = [&](const TrialOutcome& t) {
                ++trials;
                if (!o.quiet) {
                    std::ostringstream line;
                    line << name << " node " << t.node << (t.supplementary ? " tm-trial " : " trial ") << t.trial
                         << ": " << seconds_text(t.seconds) << " s, "
                         << (t.result.converged ? "stable" : "unstable") << ", mfd "
                         << format_double(t.result.mfd) << '\n';
                    const std::lock_guard lock(log_mutex);
                    err << line.str();
                }
            };
            const auto start = std::chrono::steady_clock::now();
            const auto stats = estimate_grid(grid, fixed_point, cfg);
            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            write_file_atomic(outputs[k], stats_to_csv(stats));

            std::size_t troublemakers = 0;
            double snbs = 0.0;
            for (const auto& s : stats) {
                troublemakers += s.tm ? 1 : 0;
                snbs += s.snbs;
            }
            err << name << ": " << trials.load() << " trials in " << seconds_text(elapsed) << " s ("
                << seconds_text(elapsed / static_cast<double>(trials.load())) << " s per trial), mean snbs "
                << format_double(snbs / static_cast<double>(stats.size())) << ", troublemakers " << troublemakers
                << '\n';

            if (!o.trajectory.empty()) {
                const auto colon = o.trajectory.find(':');
                if (colon == std::string::npos) {
                    throw ConfigError("--trajectory expects NODE:TRIAL");
                }
                const auto node = static_cast<std::size_t>(parse_unsigned(o.trajectory.substr(0, colon)));
                const auto trial = static_cast<std::size_t>(parse_unsigned(o.trajectory.substr(colon + 1)));
                const GridState initial = sample_perturbation(node, PerturbationSpec::snbs(), fixed_point,
                                                              trial_seed(o.seed, grid_id, node, trial));
                const fs::path tpath = o.out / ("trajectory_" + name + "_" + std::to_string(node) + "_" +
                                                std::to_string(trial) + ".csv");
                std::ofstream tout(tpath);
                if (!tout) {
                    throw IoError("cannot write " + tpath.string());
                }
                integrate(grid, o.swing, initial, o.integrator, csv_trajectory_writer(tout, grid.size()));
            }
        } catch (const NoSyncStateError& e) {
            err << "error: " << name << " (grid id " << grid_id << ") skipped: " << e.what() << '\n';
            failed.push_back(name);
        } catch (const SchemaError& e) {
            err << "error: " << name << " skipped: " << e.what() << '\n';
            failed.push_back(name);
        } catch (const ConnectivityError& e) {
            err << "error: " << name << " skipped: " << e.what() << '\n';
            failed.push_back(name);
        } catch (const BalanceError& e) {
            err << "error: " << name << " skipped: " << e.what() << '\n';
            failed.push_back(name);
        }
    }
    if (!failed.empty()) {
        err << "failed grids:";
        for (const auto& f : failed) {
            err << ' ' << f;
        }
        err << '\n';
        return failed.size() == o.grids.size() ? kNoSync : kPartial;
    }
    return kOk;
}

int cmd_build_dataset(const BuildDatasetOptions& o, const std::string& resolved_config, std::ostream& err)
{
    DatasetConfig cfg = o.dataset;
    cfg.certified_exit = !o.no_certificate;
    cfg.validate();
    if (o.force && fs::exists(o.out / "manifest.json")) {
        // Remove only files this tool writes.
        for (const auto& entry : fs::directory_iterator(o.out)) {
            const std::string file = entry.path().filename().string();
            if (file == "manifest.json" || file == "build-dataset.conf" ||
                ((file.rfind("grid_", 0) == 0 || file.rfind("targets_", 0) == 0))) {
                fs::remove(entry.path());
            }
        }
    }
    ensure_dir(o.out);
    std::mutex log_mutex;
    BuildOptions options;
    options.workers = o.workers;
    options.log = [&](const std::string& message) {
        const std::lock_guard lock(log_mutex);
        err << message << '\n';
    };
    if (o.trial_log) {
        options.on_trial = [&](const TrialOutcome& t) {
            std::ostringstream line;
            line << "node " << t.node << " trial " << t.trial << ": " << seconds_text(t.seconds) << " s\n";
            const std::lock_guard lock(log_mutex);
            err << line.str();
        };
    }
    const DatasetManifest manifest = build_dataset(o.out, cfg, options);
    write_file_atomic(o.out / "build-dataset.conf", resolved_config);
    err << "dataset " << o.out.string() << ": " << manifest.records.size() << " grids (train "
        << manifest.split.train.size() << ", validation " << manifest.split.validation.size() << ", test "
        << manifest.split.test.size() << ")\n";
    return kOk;
}

namespace {

std::vector<Eigen::Index> parse_hidden(const std::string& text)
{
    std::vector<Eigen::Index> widths;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) {
            continue;
        }
        widths.push_back(static_cast<Eigen::Index>(parse_unsigned(item)));
    }
    return widths;
}

std::vector<Eigen::Index> default_hidden(ml::ModelKind kind)
{
    switch (kind) {
    case ml::ModelKind::mlp:
        return {35};
    case ml::ModelKind::gcn:
        return {32, 32, 32};
    default:
        return {};
    }
}

}  // namespace

int cmd_train(const TrainOptions& o, const std::string& resolved_config, std::ostream& err)
{
    if (!may_write(o.out, o.force, err)) {
        return kExists;
    }
    ml::PredictorSpec spec;
    spec.kind = ml::parse_model_kind(o.model);
    spec.target = ml::parse_target(o.target);
    spec.hidden = o.hidden.empty() ? default_hidden(spec.kind) : parse_hidden(o.hidden);
    spec.hidden_activation = ml::parse_activation(o.activation);
    spec.decision_threshold = o.decision_threshold;
    ml::TrainConfig train = o.train;
    train.closed_form = spec.kind == ml::ModelKind::linreg && !o.sgd;

    const auto start = std::chrono::steady_clock::now();
    const ml::TrainOutcome outcome = ml::train_predictor(o.dataset, spec, train);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (o.out.has_parent_path()) {
        ensure_dir(o.out.parent_path());
    }
    ml::save_predictor(outcome.predictor, o.out);
    std::ostringstream history;
    history << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < outcome.history.train_loss.size(); ++e) {
        history << e + 1 << ',' << format_double(outcome.history.train_loss[e]) << ','
                << format_double(outcome.history.val_loss[e]) << '\n';
    }
    fs::path history_path = o.out;
    history_path += ".history.csv";
    write_file_atomic(history_path, history.str());
    fs::path conf_path = o.out;
    conf_path += ".conf";
    write_file_atomic(conf_path, resolved_config);
    err << "trained " << o.model << " for " << o.target << " (" << outcome.predictor.model.parameter_count()
        << " parameters) in " << seconds_text(elapsed) << " s; best epoch " << outcome.history.best_epoch
        << ", validation loss " << format_double(outcome.history.best_val_loss) << '\n';
    return kOk;
}

int cmd_evaluate(const EvaluateOptions& o, const std::string& resolved_config, std::ostream& err)
{
    const fs::path report_path = o.out / "report.json";
    const fs::path predictions_path = o.out / "predictions.csv";
    if (!may_write(report_path, o.force, err) || !may_write(predictions_path, o.force, err)) {
        return kExists;
    }
    const ml::Predictor predictor = ml::load_predictor(o.model);
    std::vector<DatasetRecord> records;
    if (!o.dataset.empty()) {
        if (!o.grids.empty()) {
            throw ConfigError("give either --dataset or --grid/--targets, not both");
        }
        const DatasetManifest manifest = load_manifest(o.dataset);
        std::vector<std::uint64_t> ids;
        if (o.split == "test") {
            ids = manifest.split.test;
        } else if (o.split == "validation") {
            ids = manifest.split.validation;
        } else if (o.split == "train") {
            ids = manifest.split.train;
        } else if (o.split == "all") {
            for (const auto& r : manifest.records) {
                ids.push_back(r.grid_id);
            }
        } else {
            throw ConfigError("unknown split '" + o.split + "' (expected train, validation, test or all)");
        }
        records = load_records(o.dataset, ids);
    } else {
        if (o.grids.empty() || o.grids.size() != o.targets.size()) {
            throw ConfigError("--grid and --targets must be given the same number of times");
        }
        for (std::size_t k = 0; k < o.grids.size(); ++k) {
            DatasetRecord r;
            r.grid_id = grid_id_from_path(o.grids[k], k);
            r.grid = import_grid(o.grids[k]);
            r.stats = read_targets(o.targets[k]);
            if (r.stats.size() != r.grid.size()) {
                throw SchemaError(o.targets[k].string() + ": " + std::to_string(r.stats.size()) +
                                  " target rows for a grid with " + std::to_string(r.grid.size()) + " nodes");
            }
            records.push_back(std::move(r));
        }
    }
    const ml::EvalReport report = ml::evaluate_predictor(predictor, records);
    ensure_dir(o.out);
    write_file_atomic(report_path, ml::report_to_json(report));
    write_file_atomic(predictions_path, ml::predictions_to_csv(report.predictions));
    write_file_atomic(o.out / "evaluate.conf", resolved_config);
    err << report.model << " on " << report.grids << " grids (" << report.nodes << " nodes): R2 "
        << format_double(report.r2) << ", mse " << format_double(report.mse);
    if (report.f_beta) {
        err << ", precision " << format_double(*report.precision) << ", recall " << format_double(*report.recall)
            << ", F2 " << format_double(*report.f_beta);
    }
    err << '\n';
    return kOk;
}

namespace {

std::string histogram_csv(const std::vector<double>& values, double lo, double hi, std::size_t bins)
{
    std::vector<std::size_t> counts(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (const double v : values) {
        auto b = width > 0.0 ? static_cast<std::ptrdiff_t>(std::floor((v - lo) / width)) : 0;
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    std::ostringstream out;
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < bins; ++b) {
        out << format_double(lo + width * static_cast<double>(b)) << ','
            << format_double(b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1)) << ',' << counts[b]
            << '\n';
    }
    return out.str();
}

std::string optional_number(const nlohmann::json& j, const char* key)
{
    return j.contains(key) && j.at(key).is_number() ? format_double(j.at(key).get<double>()) : "";
}

}  // namespace

int cmd_report(const ReportOptions& o, const std::string& resolved_config, std::ostream& err)
{
    if (o.bins == 0) {
        throw ConfigError("--bins must be at least 1");
    }
    const std::vector<fs::path> outputs{o.out / "hist_snbs.csv", o.out / "hist_mfd.csv", o.out / "tm_share.csv",
                                        o.out / "dataset_summary.csv", o.out / "metrics_summary.csv"};
    for (const auto& path : outputs) {
        if (!may_write(path, o.force, err)) {
            return kExists;
        }
    }
    const DatasetManifest manifest = load_manifest(o.dataset);
    std::vector<std::uint64_t> ids;
    for (const auto& r : manifest.records) {
        ids.push_back(r.grid_id);
    }
    const auto records = load_records(o.dataset, ids);
    std::vector<double> snbs;
    std::vector<double> mfd;
    std::size_t troublemakers = 0;
    for (const auto& r : records) {
        for (const auto& s : r.stats) {
            snbs.push_back(s.snbs);
            mfd.push_back(s.mfd_max);
            troublemakers += s.tm ? 1 : 0;
        }
    }
    if (snbs.empty()) {
        throw SchemaError("dataset has no nodes");
    }
    const double mfd_hi = std::max(manifest.config.tm.beta, *std::max_element(mfd.begin(), mfd.end()));
    ensure_dir(o.out);
    write_file_atomic(outputs[0], histogram_csv(snbs, 0.0, 1.0, o.bins));
    write_file_atomic(outputs[1], histogram_csv(mfd, 0.0, mfd_hi, o.bins));
    const double nodes = static_cast<double>(snbs.size());
    std::ostringstream tm;
    tm << "class,count,share\n"
       << "troublemaker," << troublemakers << ',' << format_double(static_cast<double>(troublemakers) / nodes) << '\n'
       << "regular," << snbs.size() - troublemakers << ','
       << format_double(static_cast<double>(snbs.size() - troublemakers) / nodes) << '\n';
    write_file_atomic(outputs[2], tm.str());

    double snbs_mean = 0.0;
    double mfd_mean = 0.0;
    for (std::size_t i = 0; i < snbs.size(); ++i) {
        snbs_mean += snbs[i];
        mfd_mean += mfd[i];
    }
    std::ostringstream summary;
    summary << "grids,nodes,snbs_mean,mfd_mean,mfd_max,tm_share,trials_per_node\n"
            << records.size() << ',' << snbs.size() << ',' << format_double(snbs_mean / nodes) << ','
            << format_double(mfd_mean / nodes) << ',' << format_double(*std::max_element(mfd.begin(), mfd.end()))
            << ',' << format_double(static_cast<double>(troublemakers) / nodes) << ',' << manifest.config.trials
            << '\n';
    write_file_atomic(outputs[3], summary.str());

    std::ostringstream metrics;
    metrics << "source,model,target,grids,nodes,r2,mse,precision,recall,f_beta\n";
    for (const auto& path : o.evaluations) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
            metrics << path.string() << ',' << j.at("model").get<std::string>() << ','
                    << j.at("target").get<std::string>() << ',' << j.at("grids").get<std::size_t>() << ','
                    << j.at("nodes").get<std::size_t>() << ',' << optional_number(j, "r2") << ','
                    << optional_number(j, "mse") << ',' << optional_number(j, "precision") << ','
                    << optional_number(j, "recall") << ',' << optional_number(j, "f_beta") << '\n';
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path.string() + ": not an evaluation report: " + e.what());
        }
    }
    write_file_atomic(outputs[4], metrics.str());
    write_file_atomic(o.out / "report.conf", resolved_config);
    err << "report for " << records.size() << " grids written to " << o.out.string() << '\n';
    return kOk;
}

}  // namespace gridstab::cli
