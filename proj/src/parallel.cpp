#include "cnp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cnp {

namespace {
std::atomic<int> g_threads{1};
std::atomic<bool> g_deterministic{false};
} // namespace

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

void set_deterministic(bool on) { g_deterministic = on; }
bool deterministic() { return g_deterministic; }

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn)
{
    if (end <= begin)
        return;
    const std::size_t n = end - begin;
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(g_threads.load()), n));
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i)
            fn(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + n * w / workers;
        const std::size_t hi = begin + n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i)
                    fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace cnp
