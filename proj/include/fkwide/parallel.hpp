#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fkwide {

/// Worker count; 0 means one per hardware thread.
inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs body(k) for k in [begin, end) over contiguous chunks. The first exception
/// thrown by any worker is rethrown on the calling thread.
template <class Body>
void parallel_for(int begin, int end, unsigned threads, Body&& body) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = static_cast<int>(std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (int k = begin; k < end; ++k) body(k);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const int chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (int k = lo; k < hi; ++k) body(k);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace fkwide
