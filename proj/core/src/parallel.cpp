#include "faim/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace faim {

int default_thread_count() {
    if (const char* env = std::getenv("FAIM_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (...) {
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_chunks(int n, int threads, const std::function<void(int, int)>& fn) {
    if (threads <= 0) threads = default_thread_count();
    if (n <= 0) return;
    if (threads == 1 || n == 1) {
        fn(0, n);
        return;
    }
    if (threads > n) threads = n;
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    const int base = n / threads;
    const int rem = n % threads;
    int begin = 0;
    std::vector<std::pair<int, int>> ranges;
    for (int t = 0; t < threads; ++t) {
        int len = base + (t < rem ? 1 : 0);
        ranges.emplace_back(begin, begin + len);
        begin += len;
    }
    for (int t = 1; t < threads; ++t) {
        pool.emplace_back([&fn, r = ranges[t]] { fn(r.first, r.second); });
    }
    fn(ranges[0].first, ranges[0].second);
    for (auto& th : pool) th.join();
}

}  // namespace faim
