#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace labp {

// Persistent worker pool for the per-round message maps. Each call to
// for_range partitions [0,n) into one contiguous chunk per participant
// (workers plus the calling thread); chunks write disjoint index ranges, so
// results do not depend on the worker count.
//
// Rounds are tens of microseconds apart, which a condition-variable wakeup
// alone cannot keep up with; workers spin briefly before falling back to a
// condition variable, so back-to-back rounds stay on the fast path while an
// idle pool still sleeps.
class ThreadPool {
public:
    explicit ThreadPool(int threads) {
        int workers = threads - 1;
        if (workers < 0) workers = 0;
        // Spinning is counterproductive once threads outnumber cores.
        const unsigned hw = std::thread::hardware_concurrency();
        spin_limit_ = (hw > static_cast<unsigned>(workers)) ? 20000 : 0;
        workers_.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i)
            workers_.emplace_back([this, slot = i + 1] { worker_loop(static_cast<std::size_t>(slot)); });
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        stop_.store(true, std::memory_order_relaxed);
        bump_generation();
        for (auto& t : workers_) t.join();
    }

    int thread_count() const { return static_cast<int>(workers_.size()) + 1; }

    // fn(begin, end) is invoked once per non-empty chunk.
    void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
        if (n == 0) return;
        const std::size_t parts = static_cast<std::size_t>(thread_count());
        if (parts == 1 || n < 2 * parts) {
            fn(0, n);
            return;
        }
        task_ = &fn;
        task_n_ = n;
        task_parts_ = parts;
        done_.store(0, std::memory_order_relaxed);
        bump_generation();
        run_chunk(fn, n, parts, 0);
        const std::size_t expected = parts - 1;
        for (std::uint32_t spins = 0; done_.load(std::memory_order_acquire) != expected; ++spins) {
            if (spins < spin_limit_) cpu_relax();
            else std::this_thread::yield();
        }
        task_ = nullptr;
    }

private:
    static void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
        __builtin_ia32_pause();
#else
        std::this_thread::yield();
#endif
    }

    void bump_generation() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            generation_.fetch_add(1, std::memory_order_release);
        }
        cv_.notify_all();
    }

    static void run_chunk(const std::function<void(std::size_t, std::size_t)>& fn,
                          std::size_t n, std::size_t parts, std::size_t slot) {
        std::size_t begin = n * slot / parts;
        std::size_t end = n * (slot + 1) / parts;
        if (begin < end) fn(begin, end);
    }

    void worker_loop(std::size_t slot) {
        std::uint64_t seen = 0;
        for (;;) {
            std::uint32_t spins = 0;
            while (generation_.load(std::memory_order_acquire) == seen) {
                if (++spins < spin_limit_) {
                    cpu_relax();
                    continue;
                }
                std::unique_lock<std::mutex> lock(mu_);
                cv_.wait(lock, [&] { return generation_.load(std::memory_order_acquire) != seen; });
            }
            seen = generation_.load(std::memory_order_acquire);
            if (stop_.load(std::memory_order_relaxed)) return;
            const auto* fn = task_;
            if (fn) run_chunk(*fn, task_n_, task_parts_, slot);
            done_.fetch_add(1, std::memory_order_release);
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::atomic<std::uint64_t> generation_{0};
    std::atomic<std::size_t> done_{0};
    std::atomic<bool> stop_{false};
    const std::function<void(std::size_t, std::size_t)>* task_ = nullptr;
    std::size_t task_n_ = 0, task_parts_ = 0;
    std::uint32_t spin_limit_ = 0;
};

}  // namespace labp
