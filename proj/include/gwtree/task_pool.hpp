#pragma once

// Small work-stealing task pool.
//
// A pool of W workers: W - 1 background threads plus the thread calling
// run(), which acts as worker 0 until every task of the job has finished.
// Tasks spawned by a worker go to the back of its own deque; the owner pops
// from the back, thieves take from the front. Tasks never block on each
// other; the only synchronisation is the deque locks and the final join.

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace gwtree {

class task_pool {
public:
    /// A task receives the index of the worker executing it.
    using task = std::function<void(std::size_t worker)>;

    explicit task_pool(std::size_t workers) : queues_(workers) {
        if (workers == 0) throw std::invalid_argument("task_pool: need at least one worker");
        threads_.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) threads_.emplace_back([this, w] { background_loop(w); });
    }

    task_pool(const task_pool&) = delete;
    task_pool& operator=(const task_pool&) = delete;

    ~task_pool() {
        {
            std::lock_guard lk(sleep_mutex_);
            stop_ = true;
        }
        sleep_cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    std::size_t workers() const noexcept { return queues_.size(); }

    /// Runs `root` and everything it spawns; returns when all are done.
    /// Rethrows the first exception a task threw. Not reentrant: one job at
    /// a time per pool.
    void run(task root) {
        first_error_ = nullptr;
        pending_.store(1, std::memory_order_relaxed);
        current_worker() = 0;
        execute(root, 0);
        while (pending_.load(std::memory_order_acquire) != 0) {
            if (auto t = take(0)) {
                execute(*t, 0);
                continue;
            }
            std::unique_lock lk(sleep_mutex_);
            sleepers_.fetch_add(1);
            sleep_cv_.wait(lk, [this] {
                return queued_.load() != 0 || pending_.load(std::memory_order_acquire) == 0;
            });
            sleepers_.fetch_sub(1);
        }
        current_worker() = npos;
        if (first_error_) std::rethrow_exception(std::exchange(first_error_, nullptr));
    }

    /// Only valid from inside a running task.
    void spawn(task t) {
        const std::size_t w = current_worker();
        pending_.fetch_add(1, std::memory_order_relaxed);
        // Counted before it becomes visible so queued_ never undercounts;
        // seq_cst pairs with the sleeper's increment-then-check.
        queued_.fetch_add(1);
        {
            std::lock_guard lk(queues_[w].mutex);
            queues_[w].tasks.push_back(std::move(t));
        }
        if (sleepers_.load() != 0) {
            { std::lock_guard lk(sleep_mutex_); }
            sleep_cv_.notify_one();
        }
    }

    /// Index of the calling worker, or npos outside the pool.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    static std::size_t& current_worker() noexcept {
        thread_local std::size_t index = npos;
        return index;
    }

private:
    struct alignas(128) worker_queue {
        std::mutex mutex;
        std::deque<task> tasks;
    };

    std::optional<task> take(std::size_t w) {
        {
            auto& q = queues_[w];
            std::lock_guard lk(q.mutex);
            if (!q.tasks.empty()) {
                task t = std::move(q.tasks.back());
                q.tasks.pop_back();
                queued_.fetch_sub(1, std::memory_order_relaxed);
                return t;
            }
        }
        const std::size_t n = queues_.size();
        for (std::size_t i = 1; i < n; ++i) {
            auto& q = queues_[(w + i) % n];
            std::lock_guard lk(q.mutex);
            if (!q.tasks.empty()) {
                task t = std::move(q.tasks.front());
                q.tasks.pop_front();
                queued_.fetch_sub(1, std::memory_order_relaxed);
                return t;
            }
        }
        return std::nullopt;
    }

    void execute(task& t, std::size_t w) {
        try {
            t(w);
        } catch (...) {
            std::lock_guard lk(error_mutex_);
            if (!first_error_) first_error_ = std::current_exception();
        }
        if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
            { std::lock_guard lk(sleep_mutex_); }
            sleep_cv_.notify_all();
        }
    }

    void background_loop(std::size_t w) {
        current_worker() = w;
        for (;;) {
            if (auto t = take(w)) {
                execute(*t, w);
                continue;
            }
            std::unique_lock lk(sleep_mutex_);
            sleepers_.fetch_add(1);
            sleep_cv_.wait(lk, [this] { return stop_ || queued_.load() != 0; });
            sleepers_.fetch_sub(1);
            if (stop_) return;
        }
    }

    std::vector<worker_queue> queues_;
    std::vector<std::thread> threads_;
    std::atomic<std::size_t> pending_{0};
    std::atomic<std::size_t> queued_{0};
    std::atomic<std::size_t> sleepers_{0};
    std::mutex sleep_mutex_;
    std::condition_variable sleep_cv_;
    bool stop_ = false;
    std::mutex error_mutex_;
    std::exception_ptr first_error_;
};

} // namespace gwtree
