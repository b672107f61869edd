#include "gridstab_cli/cli.hpp"

#include "commands.hpp"

#include <gridstab/csv.hpp>
#include <gridstab/error.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

namespace gridstab::cli {

namespace {

std::string trim(std::string s)
{
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::string unquote(std::string s)
{
    s = trim(std::move(s));
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

// Flat "key = value" file (# or ; comments, [section] lines ignored) turned
// into "--key=value" arguments. Array values [a, b] expand to one argument
// per element.
std::vector<std::string> config_arguments(const fs::path& path)
{
    std::istringstream in(read_file(path));
    std::vector<std::string> args;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw CLI::ConversionError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key == "config") {
            continue;
        }
        const std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
            std::stringstream items(value.substr(1, value.size() - 2));
            std::string item;
            while (std::getline(items, item, ',')) {
                item = unquote(item);
                if (!item.empty()) {
                    args.push_back("--" + key + "=" + item);
                }
            }
        } else {
            args.push_back("--" + key + "=" + unquote(value));
        }
    }
    return args;
}

// Inserts config-file arguments right after the subcommand name so that
// explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args)
{
    if (args.empty()) {
        return args;
    }
    std::vector<std::string> expanded{args.front()};
    std::vector<std::string> rest;
    std::vector<std::string> from_file;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            from_file = config_arguments(args[i + 1]);
            ++i;
        } else if (args[i].rfind("--config=", 0) == 0) {
            from_file = config_arguments(args[i].substr(9));
        } else {
            rest.push_back(args[i]);
        }
    }
    expanded.insert(expanded.end(), from_file.begin(), from_file.end());
    expanded.insert(expanded.end(), rest.begin(), rest.end());
    return expanded;
}

void add_dynamics(CLI::App* app, SwingParams& swing, IntegratorConfig& integrator)
{
    app->add_option("--inertia", swing.inertia, "Inertia M")->capture_default_str();
    app->add_option("--damping", swing.damping, "Droop / damping alpha")->capture_default_str();
    app->add_option("--coupling", swing.coupling, "Line coupling K")->capture_default_str();
    app->add_option("--t-end", integrator.t_end, "Simulated time per trial")->capture_default_str();
    app->add_option("--atol", integrator.abs_tol, "Absolute integrator tolerance")->capture_default_str();
    app->add_option("--rtol", integrator.rel_tol, "Relative integrator tolerance")->capture_default_str();
    app->add_option("--max-steps", integrator.max_steps, "Step budget per trial")->capture_default_str();
}

void add_tm(CLI::App* app, TmConfig& tm)
{
    app->add_option("--beta", tm.beta, "Critical frequency for troublemakers (rad/s)")->capture_default_str();
    app->add_option("--gamma", tm.gamma, "Tolerated failure probability (0.05 is customary for large imported grids)")
        ->capture_default_str();
    app->add_option("--alpha-cp", tm.alpha_cp, "Clopper-Pearson confidence parameter")->capture_default_str();
    app->add_option("--min-tm-trials", tm.min_tm_trials,
                    "Minimum troublemaker trials per node; missing ones are sampled from [-pi,pi) x [-2.5,2.5]")
        ->capture_default_str();
}

void add_growth(CLI::App* app, GrowthParams& g)
{
    app->add_option("--n0", g.n0, "Initial nodes of the growth model")->capture_default_str();
    app->add_option("--p", g.p, "Probability of a redundancy line from a new node")->capture_default_str();
    app->add_option("--q", g.q, "Probability of a redundancy line between existing nodes")->capture_default_str();
    app->add_option("--r", g.r, "Exponent of the redundancy-line target score")->capture_default_str();
    app->add_option("--s", g.s, "Probability of splitting a line")->capture_default_str();
}

void take_last(CLI::App* app)
{
    for (CLI::Option* opt : app->get_options()) {
        if (opt->get_items_expected_max() <= 1) {
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        }
    }
}

std::string resolved(const CLI::App* app)
{
    std::string text = "# resolved configuration of `gridstab " + app->get_name() + "`\n";
    return text + app->config_to_str(true, false);
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Power-grid dynamic stability laboratory: generate grids, estimate basin stability and "
                 "troublemakers, build datasets, train and evaluate surrogate models.",
                 "gridstab"};
    app.set_version_flag("--version", std::string(kGeneratorVersion));
    app.require_subcommand(1);
    std::string config_help = "Flat key = value file; command-line flags override it";
    std::string unused_config;

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Generate random grid topologies with balanced injections");
    generate->add_option("--config", unused_config, config_help);
    generate->add_option("--n", gen.growth.n, "Nodes per grid (even)")->capture_default_str();
    generate->add_option("--count", gen.count, "Number of grids")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    generate->add_option("--out", gen.out, "Output directory")->required();
    generate->add_flag("--force", gen.force, "Overwrite existing files");
    add_growth(generate, gen.growth);

    EstimateOptions est;
    auto* estimate = app.add_subcommand("estimate", "Monte-Carlo SNBS / MFD / troublemaker estimation per node");
    estimate->add_option("--config", unused_config, config_help);
    estimate->add_option("--grid", est.grids, "Grid JSON file (repeatable)")->required()->check(CLI::ExistingFile);
    estimate->add_option("--out", est.out, "Output directory")->required();
    estimate->add_option("--trials", est.trials, "Perturbations per node")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    estimate->add_option("--seed", est.seed, "Master seed")->capture_default_str();
    estimate->add_option("--workers", est.workers, "Worker threads (0: GRIDSTAB_WORKERS or all cores)")
        ->capture_default_str();
    estimate->add_flag("--no-certificate", est.no_certificate,
                       "Integrate every trial to t_end instead of stopping once certified synchronous");
    estimate->add_flag("--quiet", est.quiet, "Only print per-grid summaries, not per-trial timings");
    estimate->add_flag("--force", est.force, "Overwrite existing result files");
    estimate->add_option("--trajectory", est.trajectory, "Also dump the full trajectory of NODE:TRIAL as CSV");
    add_dynamics(estimate, est.swing, est.integrator);
    add_tm(estimate, est.tm);

    BuildDatasetOptions bd;
    auto* build = app.add_subcommand("build-dataset", "Generate grids and targets into a resumable dataset directory");
    build->add_option("--config", unused_config, config_help);
    build->add_option("--out", bd.out, "Dataset directory")->required();
    build->add_option("--count", bd.dataset.count, "Number of grids")->capture_default_str();
    build->add_option("--n", bd.dataset.n_nodes, "Nodes per grid (even)")->capture_default_str();
    build->add_option("--trials", bd.dataset.trials, "Perturbations per node")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    build->add_option("--seed", bd.dataset.master_seed, "Master seed")->capture_default_str();
    build->add_option("--split-seed", bd.dataset.split_seed, "Seed of the 70:15:15 split")->capture_default_str();
    build->add_option("--workers", bd.workers, "Worker threads (0: GRIDSTAB_WORKERS or all cores)")
        ->capture_default_str();
    build->add_flag("--no-certificate", bd.no_certificate, "Integrate every trial to t_end");
    build->add_flag("--trial-log", bd.trial_log, "Print per-trial timings");
    build->add_flag("--force", bd.force, "Discard an existing dataset in the directory and rebuild");
    add_growth(build, bd.dataset.growth);
    add_dynamics(build, bd.dataset.swing, bd.dataset.integrator);
    add_tm(build, bd.dataset.tm);

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "Train a predictor on the training split of a dataset");
    train->add_option("--config", unused_config, config_help);
    train->add_option("--dataset", tr.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    train->add_option("--out", tr.out, "Checkpoint file")->required();
    train->add_option("--model", tr.model, "linreg | logreg | mlp | gcn")->capture_default_str();
    train->add_option("--target", tr.target, "snbs | mfd | tm")->capture_default_str();
    train->add_option("--hidden", tr.hidden, "Hidden widths, comma separated (mlp: 35, gcn: 32,32,32)");
    train->add_option("--activation", tr.activation, "Hidden activation")->capture_default_str();
    train->add_option("--lr", tr.train.learning_rate, "SGD learning rate")->capture_default_str();
    train->add_option("--momentum", tr.train.momentum, "SGD momentum")->capture_default_str();
    train->add_option("--batch-size", tr.train.batch_size, "Grids per step")->capture_default_str();
    train->add_option("--epochs", tr.train.epochs, "Maximum epochs")->capture_default_str();
    train->add_option("--patience", tr.train.patience, "Early-stopping patience (epochs)")->capture_default_str();
    train->add_option("--pos-weight", tr.train.pos_weight, "Positive-class weight for tm (0: #neg/#pos)")
        ->capture_default_str();
    train->add_option("--seed", tr.train.seed, "Initialization and shuffling seed")->capture_default_str();
    train->add_option("--workers", tr.train.workers, "Threads for per-grid gradients")->capture_default_str();
    train->add_option("--threshold", tr.decision_threshold, "tm decision threshold on the probability")
        ->capture_default_str();
    train->add_flag("--sgd", tr.sgd, "Fit linreg by SGD instead of the normal equations");
    train->add_flag("--force", tr.force, "Overwrite an existing checkpoint");

    EvaluateOptions ev;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset split or on grid files");
    evaluate->add_option("--config", unused_config, config_help);
    evaluate->add_option("--model", ev.model, "Checkpoint file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--dataset", ev.dataset, "Dataset directory")->check(CLI::ExistingDirectory);
    evaluate->add_option("--split", ev.split, "train | validation | test | all")->capture_default_str();
    evaluate->add_option("--grid", ev.grids, "Grid JSON file (repeatable, paired with --targets)")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--targets", ev.targets, "Targets or estimate CSV for the matching --grid")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out", ev.out, "Output directory")->required();
    evaluate->add_flag("--force", ev.force, "Overwrite existing outputs");

    ReportOptions rp;
    auto* report = app.add_subcommand("report", "Histogram data and metric tables for a dataset");
    report->add_option("--config", unused_config, config_help);
    report->add_option("--dataset", rp.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    report->add_option("--bins", rp.bins, "Histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
    report->add_option("--eval", rp.evaluations, "Evaluation report.json to tabulate (repeatable)")
        ->check(CLI::ExistingFile);
    report->add_option("--out", rp.out, "Output directory")->required();
    report->add_flag("--force", rp.force, "Overwrite existing outputs");

    for (auto* sub : {generate, estimate, build, train, evaluate, report}) {
        take_last(sub);
    }

    try {
        std::vector<std::string> args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*generate) {
            return cmd_generate(gen, resolved(generate), err);
        }
        if (*estimate) {
            return cmd_estimate(est, resolved(estimate), err);
        }
        if (*build) {
            return cmd_build_dataset(bd, resolved(build), err);
        }
        if (*train) {
            return cmd_train(tr, resolved(train), err);
        }
        if (*evaluate) {
            return cmd_evaluate(ev, resolved(evaluate), err);
        }
        if (*report) {
            return cmd_report(rp, resolved(report), err);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << '\n';
        return kSchema;
    } catch (const ConnectivityError& e) {
        err << "error: " << e.what() << '\n';
        return kGridInvalid;
    } catch (const BalanceError& e) {
        err << "error: " << e.what() << '\n';
        return kGridInvalid;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const NoSyncStateError& e) {
        err << "error: " << e.what() << '\n';
        return kNoSync;
    } catch (const TrainingError& e) {
        err << "error: " << e.what() << '\n';
        return kTraining;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace gridstab::cli
