#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/gateway/gateway.hpp"
#include "grounder/gateway/mock_services.hpp"
#include "grounder/gateway/transport.hpp"
#include "grounder/pipeline/config.hpp"

namespace grounder::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("grounder-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    return nlohmann::json::parse(in);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << text;
}

inline nlohmann::json default_fixture_json() { return read_json(pipeline::default_fixture_path()); }

/// The shipped fixture with `patch` merged in (RFC 7386).
inline gateway::mock::MockFixture fixture_with(const nlohmann::json& patch) {
    auto j = default_fixture_json();
    j.merge_patch(patch);
    return gateway::mock::MockFixture::from_json(j);
}

/// In-process mock services behind a gateway whose every role points at `endpoints` mock names.
struct MockRig {
    std::shared_ptr<gateway::RoutingTransport> transport = std::make_shared<gateway::RoutingTransport>();
    std::vector<std::shared_ptr<gateway::mock::MockServices>> services;
    std::unique_ptr<gateway::Gateway> gateway;

    MockRig(const std::vector<gateway::mock::MockFixture>& fixtures, int max_retries = 2,
            std::chrono::milliseconds timeout = std::chrono::milliseconds{5000}) {
        std::vector<gateway::EndpointConfig> endpoints;
        for (std::size_t i = 0; i < fixtures.size(); ++i) {
            const std::string name = "m" + std::to_string(i);
            services.push_back(std::make_shared<gateway::mock::MockServices>(fixtures[i]));
            transport->register_mock(name, services.back());
            endpoints.push_back({"mock://" + name, 1});
        }
        gateway::GatewaySettings settings;
        for (auto* s : {&settings.chat, &settings.detector, &settings.tracker, &settings.embedder}) {
            s->endpoints = endpoints;
            s->pool.max_retries = max_retries;
            s->pool.timeout = timeout;
        }
        settings.chat.model = "mock-vlm";
        settings.embedder.model = "mock-embedder";
        gateway = std::make_unique<gateway::Gateway>(settings, transport);
    }

    explicit MockRig(const gateway::mock::MockFixture& fixture) : MockRig(std::vector{fixture}) {}
    MockRig() : MockRig(gateway::mock::MockFixture::load(pipeline::default_fixture_path())) {}

    gateway::Gateway& operator*() { return *gateway; }
    gateway::Gateway* operator->() { return gateway.get(); }
};

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(engine_); }
    template <class T>
    const T& pick(const std::vector<T>& items) {
        return items[static_cast<std::size_t>(integer(0, static_cast<int>(items.size()) - 1))];
    }
    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace grounder::testing
