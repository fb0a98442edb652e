#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "pswarm/types.hpp"

namespace pswarm {

/// Fixed-size worker pool. The calling thread always participates, so
/// ThreadPool(1) spawns no threads and runs everything inline, which is the
/// deterministic sequential mode used as the bit-exact baseline.
class ThreadPool {
public:
    explicit ThreadPool(unsigned workers) : n_workers_(workers == 0 ? 1 : workers) {
        for (unsigned i = 0; i + 1 < n_workers_; ++i) {
            threads_.emplace_back([this, i] { worker_loop(i); });
        }
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
        }
        cv_start_.notify_all();
        for (auto& t : threads_) {
            t.join();
        }
    }

    unsigned size() const noexcept { return n_workers_; }

    /// Splits [0, total) into size() near-equal contiguous chunks and runs
    /// chunk_fn(begin, end) on each. The partition depends only on (total,
    /// size()), so repeated runs perform identical arithmetic.
    void parallel_chunks(Index total, const std::function<void(Index, Index)>& chunk_fn) {
        if (total <= 0) {
            return;
        }
        if (n_workers_ == 1 || total == 1) {
            chunk_fn(0, total);
            return;
        }
        const Index w = static_cast<Index>(n_workers_);
        run([&](unsigned worker) {
            const Index i = static_cast<Index>(worker);
            const Index begin = total * i / w;
            const Index end = total * (i + 1) / w;
            if (begin < end) {
                chunk_fn(begin, end);
            }
        });
    }

    /// Dynamic scheduling: workers pull task indices one at a time until the
    /// queue drains. Used for independently convergent group solves.
    void parallel_tasks(Index n_tasks, const std::function<void(Index)>& task_fn) {
        if (n_tasks <= 0) {
            return;
        }
        if (n_workers_ == 1) {
            for (Index i = 0; i < n_tasks; ++i) {
                task_fn(i);
            }
            return;
        }
        std::atomic<Index> next{0};
        run([&](unsigned) {
            for (;;) {
                const Index i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n_tasks) {
                    return;
                }
                task_fn(i);
            }
        });
    }

private:
    void worker_loop(unsigned index) {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(unsigned)>* job = nullptr;
            {
                std::unique_lock lock(mutex_);
                cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) {
                    return;
                }
                seen = generation_;
                job = job_;
            }
            invoke(*job, index);
            {
                std::lock_guard lock(mutex_);
                if (--pending_ == 0) {
                    cv_done_.notify_all();
                }
            }
        }
    }

    void invoke(const std::function<void(unsigned)>& job, unsigned index) {
        try {
            job(index);
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!first_error_) {
                first_error_ = std::current_exception();
            }
        }
    }

    void run(const std::function<void(unsigned)>& job) {
        {
            std::lock_guard lock(mutex_);
            job_ = &job;
            pending_ = static_cast<unsigned>(threads_.size());
            first_error_ = nullptr;
            ++generation_;
        }
        cv_start_.notify_all();
        invoke(job, n_workers_ - 1); // caller takes the last worker slot
        std::unique_lock lock(mutex_);
        cv_done_.wait(lock, [&] { return pending_ == 0; });
        if (first_error_) {
            std::exception_ptr err = first_error_;
            first_error_ = nullptr;
            lock.unlock();
            std::rethrow_exception(err);
        }
    }

    unsigned n_workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_start_;
    std::condition_variable cv_done_;
    const std::function<void(unsigned)>* job_ = nullptr;
    std::uint64_t generation_ = 0;
    unsigned pending_ = 0;
    bool stop_ = false;
    std::exception_ptr first_error_;
};

} // namespace pswarm
