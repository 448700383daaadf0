#include "speckle/thread_pool.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spk {

int default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

ParallelFor thread_pool_executor(int jobs) {
    if (jobs <= 1) return sequential_executor();
    return [jobs](int n, const std::function<void(int)>& body) {
        std::atomic<int> next{0};
        std::atomic<bool> stop{false};
        std::exception_ptr first;
        std::mutex mu;
        auto worker = [&] {
            for (;;) {
                if (stop.load()) return;
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first) first = std::current_exception();
                    stop = true;
                }
            }
        };
        const int nt = std::min(jobs, n);
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (first) std::rethrow_exception(first);
    };
}

}  // namespace spk
