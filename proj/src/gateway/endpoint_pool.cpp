#include "grounder/gateway/endpoint_pool.hpp"

#include <optional>

#include <spdlog/spdlog.h>

namespace grounder::gateway {

EndpointPool::EndpointPool(std::vector<EndpointConfig> endpoints, PoolOptions options) : options_(std::move(options)) {
    if (endpoints.empty()) {
        throw Error(ErrorCode::kConfig, "endpoint pool needs at least one endpoint");
    }
    if (options_.max_retries < 0) {
        throw Error(ErrorCode::kConfig, "max_retries must be non-negative");
    }
    for (auto& e : endpoints) {
        if (e.weight < 1) {
            throw Error(ErrorCode::kConfig, "endpoint weight must be positive: " + e.url);
        }
        entries_.push_back(Entry{std::move(e)});
    }
}

void EndpointPool::Lease::release() {
    if (pool_ != nullptr) {
        std::lock_guard lock(pool_->mutex_);
        auto& entry = pool_->entries_[id_];
        if (entry.in_flight > 0) {
            --entry.in_flight;
        }
        pool_ = nullptr;
    }
}

std::size_t EndpointPool::select_locked() {
    const std::size_t n = entries_.size();
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = (cursor_ + k) % n;
        const auto& e = entries_[i];
        if (e.health != EndpointHealth::kHealthy) {
            continue;
        }
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = entries_[*best];
        // Compare in_flight / weight without division.
        if (static_cast<long long>(e.in_flight) * b.config.weight < static_cast<long long>(b.in_flight) * e.config.weight) {
            best = i;
        }
    }
    if (!best) {
        throw Error(ErrorCode::kNoHealthyEndpoint, "no healthy endpoint in pool");
    }
    cursor_ = (*best + 1) % n;
    return *best;
}

std::size_t EndpointPool::route() {
    std::lock_guard lock(mutex_);
    return select_locked();
}

EndpointPool::Lease EndpointPool::acquire() {
    std::lock_guard lock(mutex_);
    const std::size_t id = select_locked();
    ++entries_[id].in_flight;
    return Lease(this, id);
}

void EndpointPool::mark_failure(std::size_t id) {
    std::lock_guard lock(mutex_);
    auto& e = entries_.at(id);
    if (e.health == EndpointHealth::kHealthy) {
        spdlog::debug("endpoint {} marked dead", e.config.url);
        e.health = EndpointHealth::kDead;
    }
}

void EndpointPool::set_health(std::size_t id, EndpointHealth health) {
    std::lock_guard lock(mutex_);
    entries_.at(id).health = health;
}

void EndpointPool::set_in_flight(std::size_t id, int count) {
    std::lock_guard lock(mutex_);
    entries_.at(id).in_flight = count < 0 ? 0 : count;
}

std::size_t EndpointPool::probe_dead(Transport& transport) {
    std::vector<std::pair<std::size_t, std::string>> dead;
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].health == EndpointHealth::kDead) {
                dead.emplace_back(i, entries_[i].config.url);
            }
        }
    }
    std::size_t revived = 0;
    for (const auto& [id, url] : dead) {
        bool ok = false;
        try {
            const auto reply = transport.send(url, HttpRequest{"GET", options_.health_path, {}, {}}, options_.timeout);
            ok = reply.status >= 200 && reply.status < 300;
        } catch (const Error&) {
            ok = false;
        }
        if (ok) {
            std::lock_guard lock(mutex_);
            if (entries_[id].health == EndpointHealth::kDead) {
                entries_[id].health = EndpointHealth::kHealthy;
                ++revived;
            }
        }
    }
    return revived;
}

int EndpointPool::in_flight(std::size_t id) const {
    std::lock_guard lock(mutex_);
    return entries_.at(id).in_flight;
}

EndpointHealth EndpointPool::health(std::size_t id) const {
    std::lock_guard lock(mutex_);
    return entries_.at(id).health;
}

std::size_t EndpointPool::healthy_count() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& e : entries_) {
        n += e.health == EndpointHealth::kHealthy ? 1 : 0;
    }
    return n;
}

}  // namespace grounder::gateway
