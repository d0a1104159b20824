#include "celab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace celab {

unsigned effective_threads(unsigned requested) {
    unsigned n = requested;
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0)
            n = 1;
    }
    if (const char* cap = std::getenv("CE_LAB_THREADS")) {
        unsigned long v = std::strtoul(cap, nullptr, 10);
        if (v >= 1 && v < n)
            n = static_cast<unsigned>(v);
    }
    return n;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0)
        return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    const std::size_t chunk = std::max<std::size_t>(1, n / (threads * 8));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t lo = next.fetch_add(chunk);
            if (lo >= n)
                return;
            std::size_t hi = std::min(n, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i)
                fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
}

} // namespace celab
