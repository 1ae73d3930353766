#include "symreg/orchestrator.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include "symreg/error.hpp"
#include "symreg/metrics.hpp"
#include "symreg/persistence.hpp"

namespace symreg {

using nlohmann::json;
namespace fs = std::filesystem;

Partition PartitionSpec::to_partition() const
{
    return Partition::from_one_based(fitness.first, fitness.last, validation.first, validation.last, test.first,
                                     test.last);
}

namespace {

char single_char(const json& j, const char* key)
{
    auto s = j.get<std::string>();
    if (s.size() != 1) {
        throw ConfigError(std::string(key) + " must be a single character");
    }
    return s[0];
}

ObservationRange observation_range(const json& j, const char* key)
{
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError(std::string("partition.") + key + " must be a [first, last] pair of 1-based observations");
    }
    return { j[0].get<std::size_t>(), j[1].get<std::size_t>() };
}

std::string number_text(double v)
{
    std::array<char, 64> buf {};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string sanitize(const std::string& name)
{
    std::string out;
    for (char c : name) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-'
            || c == '_' || c == '.';
        out += keep ? c : '_';
    }
    if (out.empty() || out == "." || out == "..") {
        out = "_" + out;
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base_dir)
{
    if (!j.is_object()) {
        throw ConfigError("experiment configuration must be a JSON object");
    }
    ExperimentConfig c;
    try {
        static const std::set<std::string> known { "dataset", "preprocessing", "partition", "gp", "targets",
                                                   "runs_per_target", "base_seed", "jobs", "output_dir", "network_k" };
        for (const auto& [key, value] : j.items()) {
            if (!known.contains(key)) {
                throw ConfigError("unknown configuration key '" + key + "'");
            }
        }

        const auto& ds = j.at("dataset");
        c.dataset.path = ds.at("path").get<std::string>();
        if (c.dataset.path.is_relative() && !base_dir.empty()) {
            c.dataset.path = base_dir / c.dataset.path;
        }
        if (ds.contains("delimiter")) c.dataset.csv.delimiter = single_char(ds["delimiter"], "dataset.delimiter");
        if (ds.contains("decimal")) c.dataset.csv.decimal = single_char(ds["decimal"], "dataset.decimal");
        if (ds.contains("missing_tokens")) c.dataset.csv.missing_tokens = ds["missing_tokens"].get<std::vector<std::string>>();

        bool lag_given = false;
        if (j.contains("preprocessing")) {
            const auto& pp = j["preprocessing"];
            if (pp.contains("max_lag")) {
                c.preprocessing.max_lag = pp["max_lag"].get<std::size_t>();
                lag_given = true;
            }
            if (pp.contains("apply_derivative")) {
                const auto& ad = pp["apply_derivative"];
                if (ad.is_array()) {
                    for (const auto& name : ad) c.preprocessing.apply_derivative[name.get<std::string>()] = true;
                } else {
                    c.preprocessing.apply_derivative = ad.get<std::map<std::string, bool>>();
                }
            }
        }
        if (j.contains("partition")) {
            const auto& p = j["partition"];
            if (p.contains("fitness")) c.partition.fitness = observation_range(p["fitness"], "fitness");
            if (p.contains("validation")) c.partition.validation = observation_range(p["validation"], "validation");
            if (p.contains("test")) c.partition.test = observation_range(p["test"], "test");
        }
        if (j.contains("gp")) {
            const auto& gp = j["gp"];
            c.gp = gp_config_from_json(gp);
            if (gp.contains("max_lag")) {
                if (lag_given && c.gp.max_lag != c.preprocessing.max_lag) {
                    throw ConfigError("gp.max_lag and preprocessing.max_lag disagree");
                }
                c.preprocessing.max_lag = c.gp.max_lag;
            }
        }
        c.gp.max_lag = c.preprocessing.max_lag;
        if (j.contains("targets")) c.targets = j["targets"].get<std::vector<std::string>>();
        if (j.contains("runs_per_target")) c.runs_per_target = j["runs_per_target"].get<std::size_t>();
        if (j.contains("base_seed")) c.base_seed = j["base_seed"].get<std::uint64_t>();
        if (j.contains("jobs")) c.jobs = j["jobs"].get<std::size_t>();
        if (j.contains("network_k")) c.network_k = j["network_k"].get<std::size_t>();
        if (j.contains("output_dir")) {
            c.output_dir = j["output_dir"].get<std::string>();
            if (c.output_dir.is_relative() && !base_dir.empty()) {
                c.output_dir = base_dir / c.output_dir;
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path)
{
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return experiment_config_from_json(j, path.parent_path());
}

json experiment_config_to_json(const ExperimentConfig& c)
{
    auto gp = gp_config_to_json(c.gp);
    gp.erase("rng_seed");
    return json {
        { "dataset",
          { { "path", c.dataset.path.filename().string() },
            { "delimiter", std::string(1, c.dataset.csv.delimiter) },
            { "decimal", std::string(1, c.dataset.csv.decimal) },
            { "missing_tokens", c.dataset.csv.missing_tokens } } },
        { "preprocessing", { { "max_lag", c.preprocessing.max_lag }, { "apply_derivative", c.preprocessing.apply_derivative } } },
        { "partition",
          { { "fitness", { c.partition.fitness.first, c.partition.fitness.last } },
            { "validation", { c.partition.validation.first, c.partition.validation.last } },
            { "test", { c.partition.test.first, c.partition.test.last } } } },
        { "gp", gp },
        { "targets", c.targets },
        { "runs_per_target", c.runs_per_target },
        { "base_seed", c.base_seed },
        { "network_k", c.network_k },
    };
}

PreparedData prepare_experiment(const ExperimentConfig& config)
{
    if (config.runs_per_target < 1) throw ConfigError("runs_per_target must be at least 1");
    if (config.jobs < 1) throw ConfigError("jobs must be at least 1");
    if (config.network_k < 1) throw ConfigError("network_k must be at least 1");
    if (config.gp.max_lag != config.preprocessing.max_lag) {
        throw ConfigError("gp.max_lag and preprocessing.max_lag disagree");
    }
    config.gp.validate();

    auto table = load_csv_file(config.dataset.path, config.dataset.csv);
    std::set<std::string> derive;
    for (const auto& [name, flag] : config.preprocessing.apply_derivative) {
        if (!table.index_of(name)) {
            throw ConfigError("preprocessing names unknown variable '" + name + "'");
        }
        if (flag) derive.insert(name);
    }
    if (!derive.empty()) {
        table = apply_derivatives(table, derive);
    }
    if (table.width() < 2) {
        throw ConfigError("dataset needs at least two variables");
    }
    LaggedDesignMatrix matrix(std::move(table), config.preprocessing.max_lag);

    Partition partition = config.partition.to_partition();
    partition.validate(matrix.length());
    if (partition.fitness.first < matrix.first_valid_row()) {
        throw ConfigError("fitness range starts at observation " + std::to_string(partition.fitness.first + 1)
                          + " but lags need observations from " + std::to_string(matrix.first_valid_row() + 1));
    }

    std::vector<std::string> targets = config.targets.empty() ? matrix.table().names() : config.targets;
    std::set<std::string> seen;
    for (const auto& t : targets) {
        if (!matrix.table().index_of(t)) throw ConfigError("unknown target variable '" + t + "'");
        if (!seen.insert(t).second) throw ConfigError("target '" + t + "' listed twice");
    }
    return { std::move(matrix), partition, std::move(targets) };
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, std::size_t target_index, std::size_t run_index) noexcept
{
    const auto key = (static_cast<std::uint64_t>(target_index) << 32) ^ static_cast<std::uint64_t>(run_index);
    return splitmix64(splitmix64(base_seed) ^ key);
}

ScoreSummary five_number_summary(std::string target, std::span<const double> scores)
{
    if (scores.empty()) {
        throw UsageError("no scores to summarize for '" + target + "'");
    }
    return { std::move(target), scores.size(), quantile(scores, 0.0), quantile(scores, 0.25), quantile(scores, 0.5),
             quantile(scores, 0.75), quantile(scores, 1.0) };
}

std::vector<ScoreSummary> summarize_scores(std::span<const TargetResults> groups)
{
    std::vector<ScoreSummary> out;
    for (const auto& g : groups) {
        std::vector<double> test;
        for (const auto& r : g.runs) test.push_back(r.scores.test);
        out.push_back(five_number_summary(g.target, test));
    }
    return out;
}

std::string scores_to_csv(std::span<const ScoreSummary> summaries)
{
    std::string out = "target,runs,min,lower_quartile,median,upper_quartile,max\n";
    for (const auto& s : summaries) {
        out += csv_field(s.target) + "," + std::to_string(s.runs) + "," + number_text(s.min) + ","
            + number_text(s.lower_quartile) + "," + number_text(s.median) + "," + number_text(s.upper_quartile) + ","
            + number_text(s.max) + "\n";
    }
    return out;
}

std::string relevance_matrix_csv(std::span<const AggregatedRelevance> aggregates, std::span<const std::string> variables)
{
    std::string out = "target";
    for (const auto& v : variables) out += "," + csv_field(v);
    out += "\n";
    for (const auto& agg : aggregates) {
        out += csv_field(agg.target);
        for (const auto& v : variables) {
            out += ",";
            if (v == agg.target) continue;
            auto it = agg.mean.find(v);
            out += number_text(it == agg.mean.end() ? 0.0 : it->second);
        }
        out += "\n";
    }
    return out;
}

std::string relevance_runs_csv(std::span<const TargetResults> groups)
{
    std::string out = "target,run,variable,relevance\n";
    for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.runs.size(); ++i) {
            const auto run_index = g.run_indices.empty() ? i : g.run_indices.at(i);
            for (const auto& [name, w] : g.runs[i].relevance) {
                out += csv_field(g.target) + "," + std::to_string(run_index) + "," + csv_field(name) + ","
                    + number_text(w) + "\n";
            }
        }
    }
    return out;
}

namespace {

struct PlannedRun {
    RunRecord record;
    std::uint32_t target_column = 0;
};

std::string run_file_name(const std::string& dir, std::size_t run_index)
{
    std::array<char, 32> buf {};
    std::snprintf(buf.data(), buf.size(), "run_%03zu.json", run_index);
    return "runs/" + dir + "/" + buf.data();
}

std::vector<PlannedRun> plan_runs(const ExperimentConfig& config, const PreparedData& data)
{
    std::map<std::string, std::size_t> dir_uses;
    for (const auto& t : data.targets) ++dir_uses[sanitize(t)];
    std::vector<PlannedRun> plan;
    for (const auto& t : data.targets) {
        const auto column = data.matrix.table().require_index(t);
        auto dir = sanitize(t);
        if (dir_uses[dir] > 1) dir += "_" + std::to_string(column);
        for (std::size_t r = 0; r < config.runs_per_target; ++r) {
            PlannedRun p;
            p.target_column = static_cast<std::uint32_t>(column);
            p.record.target = t;
            p.record.run_index = r;
            p.record.seed = derive_run_seed(config.base_seed, column, r);
            p.record.file = run_file_name(dir, r);
            plan.push_back(std::move(p));
        }
    }
    return plan;
}

json manifest_json(const ExperimentConfig& config, const PreparedData& data, const std::vector<PlannedRun>& plan)
{
    json runs = json::array();
    json errors = json::object();
    for (const auto& p : plan) {
        runs.push_back({ { "target", p.record.target }, { "run", p.record.run_index }, { "seed", p.record.seed },
                         { "file", p.record.file } });
        if (!p.record.ok) errors[p.record.file] = p.record.error;
    }
    return json {
        { "config", experiment_config_to_json(config) },
        { "variables", data.matrix.table().names() },
        { "targets", data.targets },
        { "network_k", config.network_k },
        { "runs", runs },
        { "errors", errors },
    };
}

bool matches_existing(const fs::path& file, const GPConfig& expected, const std::string& target, const Partition& partition)
{
    if (!fs::exists(file)) return false;
    try {
        auto existing = load_run_result(file);
        return existing.config == expected && existing.target == target && existing.partition == partition;
    } catch (const std::exception&) {
        return false;
    }
}

json load_manifest(const fs::path& out_dir)
{
    const auto path = out_dir / "manifest.json";
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    } catch (const Error& e) {
        throw ConfigError(std::string("no experiment manifest: ") + e.what());
    }
}

struct LoadedOutputs {
    std::vector<std::string> variables;
    std::vector<TargetResults> groups;
    std::vector<RunRecord> records;
    std::size_t k = 3;
    json config;
};

LoadedOutputs load_outputs(const fs::path& out_dir)
{
    const auto manifest = load_manifest(out_dir);
    LoadedOutputs out;
    try {
        out.variables = manifest.at("variables").get<std::vector<std::string>>();
        out.k = manifest.at("network_k").get<std::size_t>();
        out.config = manifest.at("config");
        std::map<std::string, std::size_t> group_of;
        for (const auto& t : manifest.at("targets")) {
            group_of[t.get<std::string>()] = out.groups.size();
            out.groups.push_back({ t.get<std::string>(), {}, {} });
        }
        const auto& errors = manifest.at("errors");
        for (const auto& entry : manifest.at("runs")) {
            RunRecord rec;
            rec.target = entry.at("target").get<std::string>();
            rec.run_index = entry.at("run").get<std::size_t>();
            rec.seed = entry.at("seed").get<std::uint64_t>();
            rec.file = entry.at("file").get<std::string>();
            const auto path = out_dir / rec.file;
            if (fs::exists(path)) {
                try {
                    auto result = load_run_result(path);
                    if (result.target != rec.target || result.config.rng_seed != rec.seed) {
                        throw Error("result file does not match the manifest entry");
                    }
                    auto& g = out.groups.at(group_of.at(rec.target));
                    g.runs.push_back(std::move(result));
                    g.run_indices.push_back(rec.run_index);
                } catch (const std::exception& e) {
                    rec.ok = false;
                    rec.error = e.what();
                }
            } else {
                rec.ok = false;
                rec.error = errors.contains(rec.file) ? errors[rec.file].get<std::string>() : "result file missing";
            }
            out.records.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    return out;
}

InteractionNetwork write_network(const fs::path& out_dir, std::span<const AggregatedRelevance> aggregates, std::size_t k)
{
    auto network = build_network(aggregates, k);
    write_text_atomic(out_dir / "network.dot", to_dot(network));
    write_text_atomic(out_dir / "network_edges.csv", to_edge_csv(network));
    return network;
}

std::vector<AggregatedRelevance> aggregate_groups(const std::vector<TargetResults>& groups)
{
    std::vector<AggregatedRelevance> out;
    for (const auto& g : groups) {
        if (!g.runs.empty()) out.push_back(aggregate_runs(g.runs));
    }
    return out;
}

} // namespace

ExperimentReport aggregate_outputs(const fs::path& out_dir, std::optional<std::size_t> k)
{
    auto loaded = load_outputs(out_dir);
    const auto network_k = k.value_or(loaded.k);

    std::vector<TargetResults> complete;
    for (const auto& g : loaded.groups) {
        if (!g.runs.empty()) complete.push_back(g);
    }

    ExperimentReport report;
    report.summaries = summarize_scores(complete);
    report.relevance = aggregate_groups(complete);
    report.network = write_network(out_dir, report.relevance, network_k);
    report.runs = loaded.records;
    report.failed_runs = static_cast<std::size_t>(
        std::count_if(report.runs.begin(), report.runs.end(), [](const RunRecord& r) { return !r.ok; }));

    write_text_atomic(out_dir / "relevance_matrix.csv", relevance_matrix_csv(report.relevance, loaded.variables));
    write_text_atomic(out_dir / "relevance_runs.csv", relevance_runs_csv(complete));
    write_text_atomic(out_dir / "scores.csv", scores_to_csv(report.summaries));

    json summaries = json::array();
    for (const auto& s : report.summaries) {
        summaries.push_back({ { "target", s.target }, { "runs", s.runs }, { "min", s.min },
                              { "lower_quartile", s.lower_quartile }, { "median", s.median },
                              { "upper_quartile", s.upper_quartile }, { "max", s.max } });
    }
    json relevance = json::object();
    for (const auto& a : report.relevance) relevance[a.target] = a.mean;
    json edges = json::array();
    for (const auto& e : report.network.edges) {
        edges.push_back({ { "source", e.source }, { "target", e.target }, { "weight", e.weight } });
    }
    json runs = json::array();
    {
        std::map<std::pair<std::string, std::size_t>, const RunResult*> by_key;
        for (const auto& g : complete) {
            for (std::size_t i = 0; i < g.runs.size(); ++i) by_key[{ g.target, g.run_indices[i] }] = &g.runs[i];
        }
        for (const auto& r : report.runs) {
            json entry { { "target", r.target }, { "run", r.run_index }, { "seed", r.seed }, { "file", r.file },
                         { "status", r.ok ? "ok" : "failed" } };
            if (r.ok) {
                const auto* result = by_key.at({ r.target, r.run_index });
                entry["test_r2"] = result->scores.test;
                entry["stop_reason"] = std::string(stop_reason_name(result->stop_reason));
                entry["generations_executed"] = result->generations_executed;
            } else {
                entry["error"] = r.error;
            }
            runs.push_back(std::move(entry));
        }
    }
    const json doc {
        { "config", loaded.config },
        { "total_runs", report.runs.size() },
        { "failed_runs", report.failed_runs },
        { "score_summaries", summaries },
        { "relevance", relevance },
        { "network", { { "k", network_k }, { "edges", edges } } },
        { "runs", runs },
    };
    write_text_atomic(out_dir / "report.json", doc.dump(1) + "\n");
    return report;
}

InteractionNetwork rebuild_network(const fs::path& out_dir, std::size_t k)
{
    auto loaded = load_outputs(out_dir);
    return write_network(out_dir, aggregate_groups(loaded.groups), k);
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressCallback& progress)
{
    const auto data = prepare_experiment(config);
    auto plan = plan_runs(config, data);
    const auto& out_dir = config.output_dir;
    fs::create_directories(out_dir);
    write_text_atomic(out_dir / "manifest.json", manifest_json(config, data, plan).dump(1) + "\n");

    std::vector<std::size_t> pending;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        auto gp = config.gp;
        gp.rng_seed = plan[i].record.seed;
        if (matches_existing(out_dir / plan[i].record.file, gp, plan[i].record.target, data.partition)) {
            ++skipped;
        } else {
            pending.push_back(i);
        }
    }

    // test scores of runs executed now, checked against the persisted files below
    std::vector<std::optional<double>> fresh_scores(plan.size());
    std::atomic<std::size_t> next { 0 };
    std::mutex progress_mutex;
    std::size_t completed = 0;
    auto worker = [&]() {
        for (;;) {
            const auto slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            auto& planned = plan[pending[slot]];
            std::optional<RunResult> result;
            try {
                auto gp = config.gp;
                gp.rng_seed = planned.record.seed;
                result = run(gp, data.matrix, planned.target_column, data.partition);
                save_run_result(out_dir / planned.record.file, *result);
                fresh_scores[pending[slot]] = result->scores.test;
            } catch (const std::exception& e) {
                planned.record.ok = false;
                planned.record.error = e.what();
                result.reset();
            }
            if (progress) {
                std::lock_guard lock(progress_mutex);
                ++completed;
                progress({ completed, pending.size(), &planned.record, result ? &*result : nullptr });
            }
        }
    };
    {
        const auto workers = std::min(config.jobs, std::max<std::size_t>(pending.size(), 1));
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }

    for (auto& p : plan) {
        if (!p.record.ok) fs::remove(out_dir / p.record.file);
    }
    write_text_atomic(out_dir / "manifest.json", manifest_json(config, data, plan).dump(1) + "\n");

    auto report = aggregate_outputs(out_dir);
    report.executed_runs = pending.size();
    report.skipped_runs = skipped;

    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!fresh_scores[i]) continue;
        const auto persisted = load_run_result(out_dir / plan[i].record.file).scores.test;
        if (persisted != *fresh_scores[i]) {
            throw Error("persisted result '" + plan[i].record.file + "' disagrees with the computed run");
        }
    }
    return report;
}

} // namespace symreg
