#include "grounder/pipeline/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "grounder/core/error.hpp"
#include "grounder/description/prompt.hpp"
#include "grounder/gateway/mock_services.hpp"

namespace grounder::pipeline {

std::filesystem::path default_fixture_path() {
    return std::filesystem::path(GROUNDER_DATA_DIR) / "mocks" / "default_fixture.json";
}

std::filesystem::path default_schema_path() {
    return std::filesystem::path(GROUNDER_DATA_DIR) / "schemas" / "default.json";
}

PipelineConfig default_config() {
    PipelineConfig c;
    c.mocks["default"] = default_fixture_path();
    for (auto* s : {&c.services.chat, &c.services.detector, &c.services.tracker, &c.services.embedder}) {
        s->endpoints = {gateway::EndpointConfig{"mock://default", 1}};
    }
    c.services.chat.model = "mock-vlm";
    c.services.embedder.model = "mock-embedder";
    c.schema_path = default_schema_path();
    c.prompt_dir = description::PromptSet::default_dir();
    return c;
}

void PipelineConfig::check() const {
    const auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
    if (!(odf >= 1.0) || !std::isfinite(odf)) fail("odf must be >= 1");
    if (!(iou_gate > 0.0 && iou_gate < 1.0)) fail("iou_gate must lie in (0, 1)");
    if (word_cap == 0) fail("word_cap must be positive");
    if (lost_patience < 0) fail("lost_patience must be non-negative");
    if (!(crop_padding >= 0.0)) fail("crop_padding must be non-negative");
    if (max_concurrency == 0 || image_concurrency == 0) fail("concurrency limits must be positive");
    if (attribute_key.empty()) fail("attribute_key must be non-empty");
    const auto exists = [&](const std::filesystem::path& p, const std::string& what) {
        if (!std::filesystem::exists(p)) fail(what + " not found: " + p.string());
    };
    exists(schema_path, "attribute schema");
    for (const char* name : {"describe", "attribute", "validate", "define"}) {
        exists(prompt_dir / (std::string(name) + "." + prompt_version + ".txt"), "prompt template");
    }
    if (augmented_classes) exists(*augmented_classes, "augmented class file");
    for (const auto& [name, path] : mocks) exists(path, "mock fixture " + name);
    for (const auto* s : {&services.chat, &services.detector, &services.tracker, &services.embedder}) {
        if (s->endpoints.empty()) fail("every service needs at least one endpoint");
        for (const auto& e : s->endpoints) {
            if (e.weight <= 0) fail("endpoint weights must be positive: " + e.url);
            if (e.url.rfind("mock://", 0) == 0 && mocks.count(e.url.substr(7)) == 0) {
                fail("endpoint " + e.url + " names no configured mock fixture");
            }
        }
    }
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void read_service(const nlohmann::json& j, gateway::ServiceSettings& s) {
    if (j.contains("endpoints")) {
        s.endpoints.clear();
        for (const auto& e : j["endpoints"]) {
            if (e.is_string()) {
                s.endpoints.push_back({e.get<std::string>(), 1});
            } else {
                s.endpoints.push_back({e.at("url").get<std::string>(), e.value("weight", 1)});
            }
        }
    }
    if (j.contains("timeout_ms")) s.pool.timeout = std::chrono::milliseconds(j["timeout_ms"].get<std::int64_t>());
    if (j.contains("max_retries")) s.pool.max_retries = j["max_retries"].get<int>();
    if (j.contains("health_path")) s.pool.health_path = j["health_path"].get<std::string>();
    if (j.contains("model")) s.model = j["model"].get<std::string>();
    if (j.contains("temperature")) s.temperature = j["temperature"].get<double>();
    if (j.contains("max_tokens")) s.max_tokens = j["max_tokens"].get<int>();
    if (j.contains("api_key_env")) {
        const auto name = j["api_key_env"].get<std::string>();
        if (const char* value = std::getenv(name.c_str())) {
            s.api_key = value;
        }
    }
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    PipelineConfig c = default_config();
    try {
        if (j.contains("mocks")) {
            c.mocks.clear();
            for (const auto& [name, path] : j["mocks"].items()) {
                c.mocks[name] = resolve(base_dir, path.get<std::string>());
            }
        }
        if (j.contains("services")) {
            const auto& s = j["services"];
            if (s.contains("chat")) read_service(s["chat"], c.services.chat);
            if (s.contains("detector")) read_service(s["detector"], c.services.detector);
            if (s.contains("tracker")) read_service(s["tracker"], c.services.tracker);
            if (s.contains("embedder")) read_service(s["embedder"], c.services.embedder);
        }
        if (j.contains("schema")) c.schema_path = resolve(base_dir, j["schema"].get<std::string>());
        if (j.contains("prompts")) {
            const auto& p = j["prompts"];
            if (p.contains("dir")) c.prompt_dir = resolve(base_dir, p["dir"].get<std::string>());
            if (p.contains("version")) c.prompt_version = p["version"].get<std::string>();
        }
        if (j.contains("augmented_classes") && !j["augmented_classes"].is_null()) {
            c.augmented_classes = resolve(base_dir, j["augmented_classes"].get<std::string>());
        }
        c.odf = j.value("odf", c.odf);
        c.validate = j.value("validate", c.validate);
        c.task = j.value("task", c.task);
        c.attribute_key = j.value("attribute_key", c.attribute_key);
        c.word_cap = j.value("word_cap", c.word_cap);
        c.iou_gate = j.value("iou_gate", c.iou_gate);
        c.lost_patience = j.value("lost_patience", c.lost_patience);
        c.crop_padding = j.value("crop_padding", c.crop_padding);
        c.invalid_keyword = j.value("invalid_keyword", c.invalid_keyword);
        c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
        c.image_concurrency = j.value("image_concurrency", c.image_concurrency);
        if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
        if (j.contains("cache_dir")) c.cache_dir = resolve(base_dir, j["cache_dir"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, std::string("config: ") + e.what());
    }
    c.check();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kConfig, "cannot open config: " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::kConfig, "config is not a JSON object: " + path.string());
    }
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return config_from_json(j, base);
}

std::shared_ptr<gateway::RoutingTransport> make_transport(const PipelineConfig& config) {
    auto transport = std::make_shared<gateway::RoutingTransport>();
    for (const auto& [name, path] : config.mocks) {
        transport->register_mock(name, std::make_shared<gateway::mock::MockServices>(gateway::mock::MockFixture::load(path)));
    }
    return transport;
}

}  // namespace grounder::pipeline
