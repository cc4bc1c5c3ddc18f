#include "relucert/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace relucert {

int resolve_workers(int workers) {
    if (workers > 0)
        return workers;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0)
        return;
    int nw = std::min(resolve_workers(workers), n);
    if (nw <= 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err)
                    err = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w)
        threads.emplace_back(work);
    for (auto& t : threads)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

} // namespace relucert
