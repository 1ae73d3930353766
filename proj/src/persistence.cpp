#include "symreg/persistence.hpp"

#include <fstream>
#include <sstream>

#include "symreg/error.hpp"

namespace symreg {

using nlohmann::json;

json gp_config_to_json(const GPConfig& c)
{
    return json {
        { "population_size", c.population_size },
        { "max_generations", c.max_generations },
        { "tournament_size", c.tournament_size },
        { "one_point_mutation_rate", c.one_point_mutation_rate },
        { "subtree_mutation_rate", c.subtree_mutation_rate },
        { "initial_depth_limit", c.initial_depth_limit },
        { "spearman_stop_threshold", c.spearman_stop_threshold },
        { "constant_range", json::array({ c.constant_min, c.constant_max }) },
        { "max_lag", c.max_lag },
        { "rng_seed", c.rng_seed },
    };
}

GPConfig gp_config_from_json(const json& j, GPConfig c)
{
    if (!j.is_object()) {
        throw ConfigError("GP configuration must be an object");
    }
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "population_size") c.population_size = value.get<std::size_t>();
            else if (key == "max_generations") c.max_generations = value.get<std::size_t>();
            else if (key == "tournament_size") c.tournament_size = value.get<std::size_t>();
            else if (key == "one_point_mutation_rate") c.one_point_mutation_rate = value.get<double>();
            else if (key == "subtree_mutation_rate") c.subtree_mutation_rate = value.get<double>();
            else if (key == "initial_depth_limit") c.initial_depth_limit = value.get<std::size_t>();
            else if (key == "spearman_stop_threshold") c.spearman_stop_threshold = value.get<double>();
            else if (key == "constant_range") {
                if (!value.is_array() || value.size() != 2) {
                    throw ConfigError("constant_range must be a [min, max] pair");
                }
                c.constant_min = value[0].get<double>();
                c.constant_max = value[1].get<double>();
            } else if (key == "max_lag") c.max_lag = value.get<std::size_t>();
            else if (key == "rng_seed") c.rng_seed = value.get<std::uint64_t>();
            else throw ConfigError("unknown GP configuration key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid GP configuration value: ") + e.what());
    }
    return c;
}

namespace {

json range_to_json(const IndexRange& r) { return json::array({ r.first, r.last }); }

IndexRange range_from_json(const json& j) { return { j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>() }; }

} // namespace

json run_result_to_json(const RunResult& r)
{
    json trace = json::array();
    for (const auto& g : r.frequency_trace) {
        trace.push_back(g);
    }
    json history = json::array();
    for (const auto& h : r.history) {
        history.push_back({ { "generation", h.generation },
                            { "best_train", h.best_train },
                            { "best_validation", h.best_validation },
                            { "spearman", h.spearman },
                            { "depth_limit", h.depth_limit },
                            { "mean_size", h.mean_size } });
    }
    json lagged = json::array();
    for (const auto& [key, count] : lagged_ref_counts(r.best_model.tree)) {
        lagged.push_back({ { "variable", r.variables.at(key.first) }, { "lag", key.second }, { "count", count } });
    }
    return json {
        { "target", r.target },
        { "seed", r.config.rng_seed },
        { "config", gp_config_to_json(r.config) },
        { "variables", r.variables },
        { "partition",
          { { "fitness", range_to_json(r.partition.fitness) },
            { "validation", range_to_json(r.partition.validation) },
            { "test", range_to_json(r.partition.test) } } },
        { "stop_reason", std::string(stop_reason_name(r.stop_reason)) },
        { "generations_executed", r.generations_executed },
        { "best_generation", r.best_generation },
        { "scores", { { "fitness", r.scores.fitness }, { "validation", r.scores.validation }, { "test", r.scores.test } } },
        { "scale", { { "a", r.best_model.scaling.a }, { "b", r.best_model.scaling.b } } },
        { "model", to_prefix(r.best_model.tree, r.variables) },
        { "model_size", r.best_model.tree.size() },
        { "model_depth", r.best_model.tree.depth() },
        { "model_references", lagged },
        { "relevance", r.relevance },
        { "frequency_trace", trace },
        { "history", history },
    };
}

RunResult run_result_from_json(const json& j)
{
    try {
        RunResult r;
        r.target = j.at("target").get<std::string>();
        r.variables = j.at("variables").get<std::vector<std::string>>();
        r.config = gp_config_from_json(j.at("config"));
        const auto& p = j.at("partition");
        r.partition = { range_from_json(p.at("fitness")), range_from_json(p.at("validation")),
                        range_from_json(p.at("test")) };
        r.stop_reason = stop_reason_from_name(j.at("stop_reason").get<std::string>());
        r.generations_executed = j.at("generations_executed").get<std::size_t>();
        r.best_generation = j.at("best_generation").get<std::size_t>();
        const auto& s = j.at("scores");
        r.scores = { s.at("fitness").get<double>(), s.at("validation").get<double>(), s.at("test").get<double>() };
        r.best_model.scaling = { j.at("scale").at("a").get<double>(), j.at("scale").at("b").get<double>() };
        r.best_model.tree = parse_prefix(j.at("model").get<std::string>(), r.variables);
        r.relevance = j.at("relevance").get<RelevanceVector>();
        for (const auto& g : j.at("frequency_trace")) {
            r.frequency_trace.push_back(g.get<RelevanceVector>());
        }
        for (const auto& h : j.at("history")) {
            r.history.push_back({ h.at("generation").get<std::size_t>(), h.at("best_train").get<double>(),
                                  h.at("best_validation").get<double>(), h.at("spearman").get<double>(),
                                  h.at("depth_limit").get<std::size_t>(), h.at("mean_size").get<double>() });
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed run result: ") + e.what(), 1, 1);
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + tmp.string() + "'");
        }
        out << text;
        if (!out.flush()) {
            throw Error("failed writing '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void save_run_result(const std::filesystem::path& path, const RunResult& result)
{
    write_text_atomic(path, run_result_to_json(result).dump(1) + "\n");
}

RunResult load_run_result(const std::filesystem::path& path)
{
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path.string() + "' is not valid JSON: " + e.what(), 1, 1);
    }
    return run_result_from_json(j);
}

} // namespace symreg
