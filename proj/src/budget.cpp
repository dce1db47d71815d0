#include "forge/budget.hpp"

#include "forge/error.hpp"

namespace forge::budget {

namespace {
thread_local std::optional<std::chrono::steady_clock::time_point> t_deadline;
thread_local std::uint32_t t_tick = 0;
} // namespace

void set_deadline(std::optional<std::chrono::steady_clock::time_point> d) { t_deadline = d; }

std::optional<std::chrono::steady_clock::time_point> deadline() { return t_deadline; }

void check()
{
    if (!t_deadline)
        return;
    // reading the clock on every call is measurable in tight loops
    if ((++t_tick & 0x3ff) != 0)
        return;
    if (std::chrono::steady_clock::now() > *t_deadline)
        throw BudgetExceeded("wall-clock budget exceeded");
}

Scope::Scope(std::int64_t ms) : saved_(t_deadline)
{
    if (ms > 0)
        t_deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
}

Scope::~Scope() { t_deadline = saved_; }

} // namespace forge::budget
