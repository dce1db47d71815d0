#pragma once

#include <chrono>
#include <cstdint>
#include <optional>

namespace forge::budget {

// Per-thread wall-clock deadline consulted by long-running searches. Operations call
// `check()` inside their inner loops; it throws BudgetExceeded once the deadline passes.
void set_deadline(std::optional<std::chrono::steady_clock::time_point> deadline);
[[nodiscard]] std::optional<std::chrono::steady_clock::time_point> deadline();
void check();

// RAII scope installing a deadline `ms` milliseconds from now (no deadline if ms == 0).
class Scope {
public:
    explicit Scope(std::int64_t ms);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

private:
    std::optional<std::chrono::steady_clock::time_point> saved_;
};

} // namespace forge::budget
