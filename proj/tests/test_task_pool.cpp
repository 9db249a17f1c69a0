#include <gwtree/task_pool.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <stdexcept>

using gwtree::task_pool;

namespace {

// Binary fan-out of the given depth; every task counts itself.
void fan_out(task_pool& pool, std::atomic<std::size_t>& count, int depth) {
    count.fetch_add(1, std::memory_order_relaxed);
    if (depth == 0) return;
    pool.spawn([&pool, &count, depth](std::size_t) { fan_out(pool, count, depth - 1); });
    pool.spawn([&pool, &count, depth](std::size_t) { fan_out(pool, count, depth - 1); });
}

} // namespace

TEST(TaskPool, RunsEverySpawnedTask) {
    for (std::size_t workers : {1, 2, 4, 8}) {
        task_pool pool(workers);
        for (int rep = 0; rep < 20; ++rep) {
            std::atomic<std::size_t> count{0};
            pool.run([&](std::size_t) { fan_out(pool, count, 10); });
            ASSERT_EQ(count.load(), (std::size_t{1} << 11) - 1) << "workers=" << workers;
        }
    }
}

TEST(TaskPool, WorkerIndexInRange) {
    task_pool pool(4);
    std::mutex m;
    std::set<std::size_t> seen;
    pool.run([&](std::size_t w) {
        EXPECT_EQ(w, 0U);
        EXPECT_EQ(task_pool::current_worker(), 0U);
        for (int i = 0; i < 200; ++i)
            pool.spawn([&](std::size_t worker) {
                EXPECT_EQ(worker, task_pool::current_worker());
                std::lock_guard lk(m);
                seen.insert(worker);
            });
    });
    for (auto w : seen) EXPECT_LT(w, 4U);
    EXPECT_EQ(task_pool::current_worker(), task_pool::npos);
}

TEST(TaskPool, PropagatesFirstException) {
    task_pool pool(3);
    std::atomic<int> ran{0};
    EXPECT_THROW(pool.run([&](std::size_t) {
        for (int i = 0; i < 10; ++i)
            pool.spawn([&](std::size_t) {
                ran.fetch_add(1);
                throw std::runtime_error("boom");
            });
    }),
                 std::runtime_error);
    EXPECT_EQ(ran.load(), 10);
    // The pool stays usable.
    std::atomic<std::size_t> count{0};
    pool.run([&](std::size_t) { fan_out(pool, count, 4); });
    EXPECT_EQ(count.load(), 31U);
}

TEST(TaskPool, RejectsZeroWorkers) { EXPECT_THROW(task_pool(0), std::invalid_argument); }
