#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <optional>
#include <thread>
#include <variant>
#include <vector>

#include "grounder/core/error.hpp"

namespace grounder {

/// Runs fn(i) for i in [0, n) with at most `max_concurrency` calls in flight.
/// `fn` must not throw.
template <class Fn>
void bounded_parallel_for(std::size_t n, std::size_t max_concurrency, Fn&& fn) {
    if (n == 0) {
        return;
    }
    const std::size_t workers = std::clamp<std::size_t>(max_concurrency, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                fn(i);
            }
        });
    }
}

/// A value or the failure that replaced it.
template <class T>
class Outcome {
  public:
    Outcome(T value) : state_(std::move(value)) {}
    Outcome(ErrorInfo error) : state_(std::move(error)) {}

    [[nodiscard]] bool ok() const { return std::holds_alternative<T>(state_); }
    [[nodiscard]] const T& value() const { return std::get<T>(state_); }
    [[nodiscard]] T& value() { return std::get<T>(state_); }
    [[nodiscard]] const ErrorInfo& error() const { return std::get<ErrorInfo>(state_); }

  private:
    std::variant<T, ErrorInfo> state_;
};

/// Maps fn over [0, n) in parallel; exceptions are captured per slot.
template <class T, class Fn>
std::vector<Outcome<T>> parallel_collect(std::size_t n, std::size_t max_concurrency, Fn&& fn) {
    std::vector<std::optional<Outcome<T>>> slots(n);
    bounded_parallel_for(n, max_concurrency, [&](std::size_t i) {
        try {
            slots[i].emplace(fn(i));
        } catch (const Error& e) {
            slots[i].emplace(ErrorInfo{e.code(), e.what()});
        } catch (const std::exception& e) {
            slots[i].emplace(ErrorInfo{ErrorCode::kInvalidArgument, e.what()});
        }
    });
    std::vector<Outcome<T>> out;
    out.reserve(n);
    for (auto& slot : slots) {
        out.push_back(std::move(*slot));
    }
    return out;
}

}  // namespace grounder
