#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sphtrap {

/// Serial evaluation is the reference; parallel evaluation writes each index
/// exactly once and produces identical results.
enum class Execution { serial, parallel };

/// Calls body(i) for i in [0, count). In parallel mode indices are split into
/// contiguous blocks, one per hardware thread; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t count, Execution exec, Body&& body)
{
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = exec == Execution::serial ? 1 : std::min(hw, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t block = (count + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    const std::size_t end = std::min(count, (w + 1) * block);
                    for (std::size_t i = w * block; i < end; ++i)
                        body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace sphtrap
