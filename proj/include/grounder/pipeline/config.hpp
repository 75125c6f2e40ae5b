#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "grounder/gateway/gateway.hpp"
#include "grounder/gateway/transport.hpp"

namespace grounder::pipeline {

struct PipelineConfig {
    gateway::GatewaySettings services;
    /// mock:// name -> fixture file, served in-process.
    std::map<std::string, std::filesystem::path> mocks;
    std::filesystem::path schema_path;
    std::filesystem::path prompt_dir;
    std::string prompt_version = "v1";
    std::optional<std::filesystem::path> augmented_classes;

    double odf = 1.0;
    bool validate = false;
    std::string task;
    std::string attribute_key = "task_relevant";
    std::size_t word_cap = 10;
    double iou_gate = 0.6;
    int lost_patience = 5;
    double crop_padding = 0.1;
    std::string invalid_keyword = "invalid";
    /// Upper bound on concurrent requests per fan-out.
    std::size_t max_concurrency = 8;
    /// Images processed concurrently by the benchmark.
    std::size_t image_concurrency = 1;
    std::filesystem::path output_dir = "grounder-out";
    /// Definition and embedding caches; empty disables persistence.
    std::filesystem::path cache_dir;

    /// Throws Config for out-of-range values or missing referenced files.
    void check() const;
};

/// Every service pointed at the shipped default mock fixture.
PipelineConfig default_config();

/// Relative paths resolve against the directory holding the file. Throws Config.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

std::filesystem::path default_fixture_path();
std::filesystem::path default_schema_path();

/// Transport that serves the config's mock:// fixtures in-process and everything else over HTTP.
std::shared_ptr<gateway::RoutingTransport> make_transport(const PipelineConfig& config);

}  // namespace grounder::pipeline
