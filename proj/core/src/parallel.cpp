// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace strokesynth {

namespace {

std::atomic<int> g_num_threads{0};
thread_local bool t_inside_parallel = false;

int resolved_thread_count() {
    const int n = g_num_threads.load(std::memory_order_relaxed);
    if (n > 0) {
        return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Lazily started pool. Workers sleep until a parallel_for posts a job and
// pull fixed chunks from a shared counter.
class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void run(std::int64_t total, std::int64_t grain,
             const std::function<void(std::int64_t, std::int64_t)>& fn) {
        const int threads = resolved_thread_count();
        // Nested calls run serially; nesting would corrupt the shared job slot.
        if (t_inside_parallel || threads <= 1 || total <= grain) {
            for (std::int64_t b = 0; b < total; b += grain) {
                fn(b, std::min(total, b + grain));
            }
            return;
        }
        ensure_workers(threads - 1);
        std::unique_lock lock(mutex_);
        job_fn_ = &fn;
        job_total_ = total;
        job_grain_ = grain;
        next_chunk_.store(0, std::memory_order_relaxed);
        pending_ = std::min<std::int64_t>(threads - 1, (total + grain - 1) / grain);
        active_ = pending_;
        ++generation_;
        lock.unlock();
        wake_.notify_all();

        work(fn, total, grain); // caller participates
        lock.lock();
        done_.wait(lock, [this] { return active_ == 0; });
        job_fn_ = nullptr;
    }

private:
    Pool() = default;

    ~Pool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
            ++generation_;
        }
        wake_.notify_all();
        for (auto& t : workers_) {
            t.join();
        }
    }

    void ensure_workers(int n) {
        std::lock_guard lock(mutex_);
        while (static_cast<int>(workers_.size()) < n) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(std::int64_t, std::int64_t)>* fn = nullptr;
            std::int64_t total = 0;
            std::int64_t grain = 0;
            {
                std::unique_lock lock(mutex_);
                wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
                seen = generation_;
                if (stop_) {
                    return;
                }
                if (job_fn_ == nullptr || pending_ <= 0) {
                    continue;
                }
                --pending_;
                fn = job_fn_;
                total = job_total_;
                grain = job_grain_;
            }
            work(*fn, total, grain);
            {
                std::lock_guard lock(mutex_);
                if (--active_ == 0) {
                    done_.notify_all();
                }
            }
        }
    }

    void work(const std::function<void(std::int64_t, std::int64_t)>& fn,
              std::int64_t total, std::int64_t grain) {
        t_inside_parallel = true;
        for (;;) {
            const std::int64_t chunk = next_chunk_.fetch_add(1, std::memory_order_relaxed);
            const std::int64_t begin = chunk * grain;
            if (begin >= total) {
                break;
            }
            fn(begin, std::min(total, begin + grain));
        }
        t_inside_parallel = false;
    }

    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    std::vector<std::thread> workers_;
    const std::function<void(std::int64_t, std::int64_t)>* job_fn_ = nullptr;
    std::int64_t job_total_ = 0;
    std::int64_t job_grain_ = 0;
    std::atomic<std::int64_t> next_chunk_{0};
    std::int64_t pending_ = 0;
    std::int64_t active_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace

void set_num_threads(int n) {
    g_num_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed);
}

int num_threads() {
    return resolved_thread_count();
}

void parallel_for(std::int64_t total, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (total <= 0) {
        return;
    }
    if (grain <= 0) {
        grain = 1;
    }
    Pool::instance().run(total, grain, fn);
}

} // namespace strokesynth
