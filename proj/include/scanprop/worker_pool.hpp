// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace scanprop {

/// Fixed set of workers executing one level of independent tasks at a time.
/// run_level() returns only after every task of the level finished, which is
/// the barrier between scan levels. The calling thread takes part in the work,
/// so a pool of size 1 owns no threads at all.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t workers = 1);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::size_t size() const noexcept { return threads_.size() + 1; }

    /// Runs task(0) .. task(count-1), at most size() at once. Rethrows the
    /// first exception raised by a task after the level drained.
    void run_level(std::size_t count, const std::function<void(std::size_t)>& task);

private:
    void worker_loop();
    void drain(std::unique_lock<std::mutex>& lock);

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* task_ = nullptr;
    std::size_t count_ = 0;
    std::size_t next_ = 0;
    std::size_t active_ = 0;
    std::size_t generation_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

/// Worker count from SCANPROP_THREADS, falling back to `fallback`.
std::size_t default_worker_count(std::size_t fallback = 1);

}  // namespace scanprop
