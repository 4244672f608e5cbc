#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hystlat {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work is pulled
/// from a shared counter; the caller stores results by index so output order
/// never depends on scheduling. If any task throws, the exception from the
/// lowest failing index is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    if (count == 0) return;
    const unsigned workers = static_cast<unsigned>(std::clamp<std::size_t>(threads == 0 ? 1 : threads, 1, count));
    std::vector<std::exception_ptr> errors(count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next.fetch_add(1); i < count && !failed.load(); i = next.fetch_add(1)) {
                        try {
                            body(i);
                        } catch (...) {
                            errors[i] = std::current_exception();
                            failed.store(true);
                        }
                    }
                });
            }
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline unsigned default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace hystlat
