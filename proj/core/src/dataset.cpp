#include "gridstab/dataset.hpp"

#include "gridstab/csv.hpp"
#include "gridstab/error.hpp"
#include "gridstab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <sstream>

namespace gridstab {

using nlohmann::json;

void DatasetConfig::validate() const
{
    if (count == 0) {
        throw ConfigError("dataset count must be at least 1");
    }
    if (n_nodes < 2 || n_nodes % 2 != 0) {
        throw BalanceError("dataset grids need an even node count >= 2, got " + std::to_string(n_nodes));
    }
    GrowthParams g = growth;
    g.n = n_nodes;
    g.validate();
    swing.validate();
    integrator.validate();
    tm.validate();
    if (trials == 0) {
        throw ConfigError("trials per node must be at least 1");
    }
}

namespace {

json config_to_json(const DatasetConfig& c)
{
    return json{
        {"count", c.count},
        {"n_nodes", c.n_nodes},
        {"growth", {{"n0", c.growth.n0}, {"p", c.growth.p}, {"q", c.growth.q}, {"r", c.growth.r}, {"s", c.growth.s}}},
        {"swing", {{"inertia", c.swing.inertia}, {"damping", c.swing.damping}, {"coupling", c.swing.coupling}}},
        {"integrator",
         {{"t_end", c.integrator.t_end},
          {"abs_tol", c.integrator.abs_tol},
          {"rel_tol", c.integrator.rel_tol},
          {"max_steps", c.integrator.max_steps}}},
        {"tm",
         {{"beta", c.tm.beta},
          {"gamma", c.tm.gamma},
          {"alpha_cp", c.tm.alpha_cp},
          {"min_tm_trials", c.tm.min_tm_trials}}},
        {"trials", c.trials},
        {"master_seed", c.master_seed},
        {"split_seed", c.split_seed},
        {"certified_exit", c.certified_exit},
    };
}

DatasetConfig config_from_json(const json& j)
{
    DatasetConfig c;
    c.count = j.at("count").get<std::size_t>();
    c.n_nodes = j.at("n_nodes").get<std::size_t>();
    const json& g = j.at("growth");
    c.growth.n0 = g.at("n0").get<std::size_t>();
    c.growth.p = g.at("p").get<double>();
    c.growth.q = g.at("q").get<double>();
    c.growth.r = g.at("r").get<double>();
    c.growth.s = g.at("s").get<double>();
    c.growth.n = c.n_nodes;
    const json& s = j.at("swing");
    c.swing.inertia = s.at("inertia").get<double>();
    c.swing.damping = s.at("damping").get<double>();
    c.swing.coupling = s.at("coupling").get<double>();
    const json& in = j.at("integrator");
    c.integrator.t_end = in.at("t_end").get<double>();
    c.integrator.abs_tol = in.at("abs_tol").get<double>();
    c.integrator.rel_tol = in.at("rel_tol").get<double>();
    c.integrator.max_steps = in.at("max_steps").get<std::size_t>();
    const json& tm = j.at("tm");
    c.tm.beta = tm.at("beta").get<double>();
    c.tm.gamma = tm.at("gamma").get<double>();
    c.tm.alpha_cp = tm.at("alpha_cp").get<double>();
    c.tm.min_tm_trials = tm.at("min_tm_trials").get<std::size_t>();
    c.trials = j.at("trials").get<std::size_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.split_seed = j.at("split_seed").get<std::uint64_t>();
    c.certified_exit = j.at("certified_exit").get<bool>();
    return c;
}

}  // namespace

bool operator==(const DatasetConfig& a, const DatasetConfig& b)
{
    return config_to_json(a) == config_to_json(b);
}

std::vector<double> DatasetRecord::snbs() const
{
    std::vector<double> v;
    for (const auto& s : stats) {
        v.push_back(s.snbs);
    }
    return v;
}

std::vector<double> DatasetRecord::mfd() const
{
    std::vector<double> v;
    for (const auto& s : stats) {
        v.push_back(s.mfd_max);
    }
    return v;
}

std::vector<double> DatasetRecord::tm() const
{
    std::vector<double> v;
    for (const auto& s : stats) {
        v.push_back(s.tm ? 1.0 : 0.0);
    }
    return v;
}

void DatasetRecord::validate(const TmConfig& tm_cfg) const
{
    const std::string where = "grid " + std::to_string(grid_id) + ": ";
    if (stats.size() != grid.size()) {
        throw SchemaError(where + "target length " + std::to_string(stats.size()) + " differs from node count " +
                          std::to_string(grid.size()));
    }
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const NodeStats& s = stats[i];
        const std::string node = where + "node " + std::to_string(i) + ": ";
        if (s.node != i) {
            throw SchemaError(node + "rows out of order");
        }
        if (!(s.snbs >= 0.0 && s.snbs <= 1.0) || s.n_trials == 0 || s.n_stable > s.n_trials ||
            s.snbs != static_cast<double>(s.n_stable) / static_cast<double>(s.n_trials)) {
            throw SchemaError(node + "inconsistent snbs");
        }
        if (!(s.mfd_max >= 0.0) || s.n_tm_trials == 0 || s.n_within_bound > s.n_tm_trials) {
            throw SchemaError(node + "inconsistent troublemaker counts");
        }
        if (s.tm != classify_tm(s, tm_cfg)) {
            throw SchemaError(node + "tm label does not match its counts");
        }
    }
}

std::string grid_file_name(std::uint64_t grid_id)
{
    return "grid_" + std::to_string(grid_id) + ".json";
}

std::string targets_file_name(std::uint64_t grid_id)
{
    return "targets_" + std::to_string(grid_id) + ".csv";
}

std::string targets_to_csv(std::span<const NodeStats> stats)
{
    std::ostringstream out;
    out << "node,snbs,snbs_se,mfd,tm,n_trials,n_stable,n_tm_trials,n_within_bound,cp_lower\n";
    for (const auto& s : stats) {
        out << s.node << ',' << format_double(s.snbs) << ',' << format_double(s.snbs_se) << ','
            << format_double(s.mfd_max) << ',' << (s.tm ? 1 : 0) << ',' << s.n_trials << ',' << s.n_stable << ','
            << s.n_tm_trials << ',' << s.n_within_bound << ',' << format_double(s.cp_lower) << '\n';
    }
    return out.str();
}

std::vector<NodeStats> read_targets(const std::filesystem::path& path)
{
    const CsvTable table = read_csv(path);
    const auto has = [&](std::string_view name) {
        return std::find(table.header.begin(), table.header.end(), name) != table.header.end();
    };
    const std::size_t c_mfd = has("mfd") ? table.column("mfd") : table.column("mfd_max");
    const std::size_t c_node = table.column("node");
    const std::size_t c_snbs = table.column("snbs");
    const std::size_t c_tm = table.column("tm");
    const auto optional_unsigned = [&](const std::vector<std::string>& row, std::string_view name) {
        return has(name) ? static_cast<std::size_t>(parse_unsigned(row[table.column(name)])) : std::size_t{0};
    };
    const auto optional_double = [&](const std::vector<std::string>& row, std::string_view name) {
        return has(name) ? parse_double(row[table.column(name)]) : 0.0;
    };
    std::vector<NodeStats> stats;
    for (const auto& row : table.rows) {
        NodeStats s;
        s.node = parse_unsigned(row[c_node]);
        s.snbs = parse_double(row[c_snbs]);
        s.mfd_max = parse_double(row[c_mfd]);
        s.tm = parse_unsigned(row[c_tm]) != 0;
        s.snbs_se = optional_double(row, "snbs_se");
        s.cp_lower = optional_double(row, "cp_lower");
        s.n_trials = optional_unsigned(row, "n_trials");
        s.n_stable = optional_unsigned(row, "n_stable");
        s.n_tm_trials = optional_unsigned(row, "n_tm_trials");
        s.n_within_bound = optional_unsigned(row, "n_within_bound");
        if (s.node != stats.size()) {
            throw SchemaError(path.string() + ": node rows must be 0, 1, 2, ... in order");
        }
        stats.push_back(s);
    }
    return stats;
}

std::string manifest_to_json(const DatasetManifest& m)
{
    json records = json::array();
    for (const auto& r : m.records) {
        records.push_back({{"grid_id", r.grid_id},
                           {"topology_seed", r.topology_seed},
                           {"injection_seed", r.injection_seed},
                           {"attempt", r.attempt},
                           {"grid", grid_file_name(r.grid_id)},
                           {"targets", targets_file_name(r.grid_id)}});
    }
    const json doc{
        {"generator_version", m.generator_version},
        {"config", config_to_json(m.config)},
        {"complete", m.complete},
        {"records", records},
        {"split", {{"train", m.split.train}, {"validation", m.split.validation}, {"test", m.split.test}}},
    };
    return doc.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text)
{
    try {
        const json doc = json::parse(text);
        DatasetManifest m;
        m.generator_version = doc.at("generator_version").get<std::string>();
        m.config = config_from_json(doc.at("config"));
        m.complete = doc.at("complete").get<bool>();
        for (const auto& r : doc.at("records")) {
            m.records.push_back({r.at("grid_id").get<std::uint64_t>(), r.at("topology_seed").get<std::uint64_t>(),
                                 r.at("injection_seed").get<std::uint64_t>(), r.at("attempt").get<std::size_t>()});
        }
        const json& split = doc.at("split");
        m.split.train = split.at("train").get<std::vector<std::uint64_t>>();
        m.split.validation = split.at("validation").get<std::vector<std::uint64_t>>();
        m.split.test = split.at("test").get<std::vector<std::uint64_t>>();
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid dataset manifest: ") + e.what());
    }
}

DatasetManifest load_manifest(const std::filesystem::path& dir)
{
    return manifest_from_json(read_file(dir / "manifest.json"));
}

DatasetRecord load_record(const std::filesystem::path& dir, std::uint64_t grid_id)
{
    DatasetRecord r;
    r.grid_id = grid_id;
    r.grid = import_grid(dir / grid_file_name(grid_id));
    r.stats = read_targets(dir / targets_file_name(grid_id));
    if (r.stats.size() != r.grid.size()) {
        throw SchemaError("grid " + std::to_string(grid_id) + ": targets do not match the grid size");
    }
    return r;
}

std::vector<DatasetRecord> load_records(const std::filesystem::path& dir, std::span<const std::uint64_t> grid_ids)
{
    std::vector<DatasetRecord> records;
    records.reserve(grid_ids.size());
    for (const auto id : grid_ids) {
        records.push_back(load_record(dir, id));
    }
    return records;
}

SplitAssignment split_dataset(std::vector<std::uint64_t> grid_ids, std::uint64_t seed)
{
    if (grid_ids.size() < 10) {
        throw ConfigError("splitting needs at least 10 grids, got " + std::to_string(grid_ids.size()));
    }
    std::sort(grid_ids.begin(), grid_ids.end());
    if (std::adjacent_find(grid_ids.begin(), grid_ids.end()) != grid_ids.end()) {
        throw ConfigError("duplicate grid ids in split");
    }
    rng::CounterStream stream(seed, 0x73706c6974);
    for (std::size_t i = grid_ids.size() - 1; i > 0; --i) {
        std::swap(grid_ids[i], grid_ids[stream.below(i + 1)]);
    }
    const std::size_t n = grid_ids.size();
    const auto n_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(n)));
    SplitAssignment split;
    split.train.assign(grid_ids.begin(), grid_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(grid_ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                            grid_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(grid_ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), grid_ids.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

namespace {

bool record_done(const std::filesystem::path& dir, std::uint64_t id)
{
    return std::filesystem::exists(dir / grid_file_name(id)) && std::filesystem::exists(dir / targets_file_name(id));
}

}  // namespace

DatasetManifest build_dataset(const std::filesystem::path& dir, const DatasetConfig& cfg, const BuildOptions& options)
{
    cfg.validate();
    const auto log = [&](const std::string& message) {
        if (options.log) {
            options.log(message);
        } else {
            std::cerr << message << '\n';
        }
    };

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
    }

    DatasetManifest manifest;
    manifest.config = cfg;
    const auto manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        DatasetManifest existing = load_manifest(dir);
        if (!(existing.config == cfg)) {
            throw ConfigError("dataset in " + dir.string() + " was built with a different configuration");
        }
        if (existing.complete) {
            log("dataset in " + dir.string() + " is already complete");
            return existing;
        }
        manifest.records = existing.records;
    }

    std::set<std::uint64_t> finished;
    std::vector<RecordEntry> kept;
    for (const auto& r : manifest.records) {
        if (record_done(dir, r.grid_id)) {
            finished.insert(r.grid_id);
            kept.push_back(r);
        }
    }
    manifest.records = kept;

    for (std::uint64_t id = 0; id < cfg.count; ++id) {
        if (finished.count(id)) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        const std::uint64_t grid_seed = rng::derive_seed(cfg.master_seed, id);
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt >= 1000) {
                throw NoSyncStateError("grid " + std::to_string(id) + ": no candidate with a stable operating point");
            }
            const std::uint64_t topology_seed = rng::derive_seed(grid_seed, 2 * attempt);
            const std::uint64_t injection_seed = rng::derive_seed(grid_seed, 2 * attempt + 1);
            GrowthParams growth = cfg.growth;
            growth.n = cfg.n_nodes;
            growth.seed = topology_seed;
            const PowerGrid grid = assign_injections(generate_topology(growth), injection_seed);
            std::vector<double> fixed_point;
            try {
                fixed_point = find_fixed_point(grid, cfg.swing);
            } catch (const NoSyncStateError& e) {
                log("grid " + std::to_string(id) + ": discarded candidate (attempt " + std::to_string(attempt) +
                    ", topology seed " + std::to_string(topology_seed) + ", injection seed " +
                    std::to_string(injection_seed) + "): " + e.what());
                continue;
            }
            EstimationConfig est;
            est.swing = cfg.swing;
            est.integrator = cfg.integrator;
            est.tm = cfg.tm;
            est.trials = cfg.trials;
            est.master_seed = cfg.master_seed;
            est.grid_id = id;
            est.workers = options.workers;
            est.certified_exit = cfg.certified_exit;
            est.on_trial = options.on_trial;
            const auto stats = estimate_grid(grid, fixed_point, est);

            write_file_atomic(dir / grid_file_name(id), grid_to_json(grid) + "\n");
            write_file_atomic(dir / targets_file_name(id), targets_to_csv(stats));
            manifest.records.push_back({id, topology_seed, injection_seed, attempt});
            std::sort(manifest.records.begin(), manifest.records.end(),
                      [](const RecordEntry& a, const RecordEntry& b) { return a.grid_id < b.grid_id; });
            write_file_atomic(manifest_path, manifest_to_json(manifest));
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            log("grid " + std::to_string(id + 1) + "/" + std::to_string(cfg.count) + " done in " +
                format_double(std::round(seconds * 10.0) / 10.0) + " s");
            break;
        }
    }

    std::vector<std::uint64_t> ids;
    for (const auto& r : manifest.records) {
        ids.push_back(r.grid_id);
    }
    if (ids.size() >= 10) {
        manifest.split = split_dataset(ids, cfg.split_seed);
    } else {
        log("fewer than 10 grids: no train/validation/test split assigned");
    }
    manifest.complete = true;
    write_file_atomic(manifest_path, manifest_to_json(manifest));
    return manifest;
}

}  // namespace gridstab
