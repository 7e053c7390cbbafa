#ifndef LATMIX_PARALLEL_HPP
#define LATMIX_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace latmix {

// Runs fn(batch_index) for batch_index in [0, nbatches) on `workers` threads.
// Batches are claimed through an atomic counter; each fn writes only into its
// own batch slot, so the merged result is independent of scheduling. The
// caller merges slots in batch order afterwards.
template <typename Fn>
void run_batches(int nbatches, int workers, Fn&& fn) {
    if (workers < 1) workers = 1;
    if (workers == 1) {
        for (int b = 0; b < nbatches; ++b) fn(b);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto body = [&] {
        for (;;) {
            int b = next.fetch_add(1);
            if (b >= nbatches) return;
            try {
                fn(b);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int nt = std::min(workers, nbatches);
    pool.reserve(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace latmix

#endif
