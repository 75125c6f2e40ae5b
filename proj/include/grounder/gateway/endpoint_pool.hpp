#pragma once

#include <chrono>
#include <cstddef>
#include <mutex>
#include <utility>
#include <string>
#include <vector>

#include "grounder/gateway/transport.hpp"

namespace grounder::gateway {

enum class EndpointHealth { kHealthy, kDraining, kDead };

struct EndpointConfig {
    std::string url;
    int weight = 1;
};

struct PoolOptions {
    std::chrono::milliseconds timeout{10000};
    int max_retries = 2;
    std::string health_path = "/health";
};

/// Least-loaded routing over a fixed set of endpoints.
///
/// Load is in-flight requests divided by weight; ties go to the first tied
/// endpoint at or after a round-robin cursor in declaration order. Dead and
/// draining endpoints are never selected. A dead endpoint returns to service
/// only through a successful health probe.
class EndpointPool {
  public:
    EndpointPool(std::vector<EndpointConfig> endpoints, PoolOptions options);

    EndpointPool(const EndpointPool&) = delete;
    EndpointPool& operator=(const EndpointPool&) = delete;

    /// RAII in-flight slot on one endpoint.
    class Lease {
      public:
        Lease(EndpointPool* pool, std::size_t id) : pool_(pool), id_(id) {}
        Lease(Lease&& other) noexcept : pool_(std::exchange(other.pool_, nullptr)), id_(other.id_) {}
        Lease& operator=(Lease&&) = delete;
        ~Lease() { release(); }

        [[nodiscard]] std::size_t id() const { return id_; }
        void release();

      private:
        EndpointPool* pool_;
        std::size_t id_;
    };

    /// Selects an endpoint without reserving it. Throws NoHealthyEndpoint.
    [[nodiscard]] std::size_t route();
    /// Selects and reserves atomically.
    [[nodiscard]] Lease acquire();

    void mark_failure(std::size_t id);
    void set_health(std::size_t id, EndpointHealth health);
    /// Test hook: forces an in-flight count.
    void set_in_flight(std::size_t id, int count);

    /// Probes every dead endpoint; healthy replies revive it. Returns the number revived.
    std::size_t probe_dead(Transport& transport);

    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] const std::string& url(std::size_t id) const { return entries_.at(id).config.url; }
    [[nodiscard]] int in_flight(std::size_t id) const;
    [[nodiscard]] EndpointHealth health(std::size_t id) const;
    [[nodiscard]] std::size_t healthy_count() const;
    [[nodiscard]] const PoolOptions& options() const { return options_; }

  private:
    struct Entry {
        EndpointConfig config;
        EndpointHealth health = EndpointHealth::kHealthy;
        int in_flight = 0;
    };

    [[nodiscard]] std::size_t select_locked();

    mutable std::mutex mutex_;
    std::vector<Entry> entries_;
    PoolOptions options_;
    std::size_t cursor_ = 0;
};

}  // namespace grounder::gateway
