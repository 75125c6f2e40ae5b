#pragma once

#include <chrono>

namespace grounder {

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}

    [[nodiscard]] double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace grounder
