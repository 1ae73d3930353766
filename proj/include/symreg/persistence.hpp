#pragma once

#include <filesystem>

#include <json.hpp>

#include "symreg/evolution.hpp"

namespace symreg {

nlohmann::json gp_config_to_json(const GPConfig& config);
// Starts from `base` and overrides every key present in `j`; unknown keys are
// a ConfigError.
GPConfig gp_config_from_json(const nlohmann::json& j, GPConfig base = {});

// Run results as JSON documents: config echo, seed, stop reason, generation
// count, scores, scaling, model in prefix notation, relevance and the
// per-generation frequency trace.
nlohmann::json run_result_to_json(const RunResult& result);
RunResult run_result_from_json(const nlohmann::json& j);

// Writes through a temporary file and a rename so readers never observe a
// partially written document.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void save_run_result(const std::filesystem::path& path, const RunResult& result);
RunResult load_run_result(const std::filesystem::path& path);

} // namespace symreg
