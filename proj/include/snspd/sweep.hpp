#pragma once

// Fan-out of independent jobs over a fixed worker pool. Results are stored
// by job index, so the output never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace snspd {

template <class F>
auto parallel_map(std::size_t n, std::size_t workers, F&& job) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(job(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t w = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (w == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (std::size_t k = 0; k < w; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    // Report the failure of the lowest index, independent of timing.
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace snspd
