// SPDX-License-Identifier: Apache-2.0
#include "scanprop/worker_pool.hpp"

#include <cstdlib>
#include <string>

namespace scanprop {

WorkerPool::WorkerPool(std::size_t workers) {
    const std::size_t extra = workers > 1 ? workers - 1 : 0;
    threads_.reserve(extra);
    for (std::size_t i = 0; i < extra; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
}

// Pulls task indices until the level is exhausted; `lock` is held on entry and exit.
void WorkerPool::drain(std::unique_lock<std::mutex>& lock) {
    while (next_ < count_) {
        const std::size_t index = next_++;
        ++active_;
        lock.unlock();
        try {
            (*task_)(index);
        } catch (...) {
            lock.lock();
            if (!error_) error_ = std::current_exception();
            lock.unlock();
        }
        lock.lock();
        --active_;
    }
    if (active_ == 0) done_.notify_all();
}

void WorkerPool::worker_loop() {
    std::size_t seen = 0;
    std::unique_lock lock(mutex_);
    for (;;) {
        wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
        drain(lock);
    }
}

void WorkerPool::run_level(std::size_t count, const std::function<void(std::size_t)>& task) {
    if (count == 0) return;
    if (threads_.empty() || count == 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::unique_lock lock(mutex_);
    task_ = &task;
    count_ = count;
    next_ = 0;
    error_ = nullptr;
    ++generation_;
    wake_.notify_all();
    drain(lock);
    done_.wait(lock, [&] { return next_ >= count_ && active_ == 0; });
    task_ = nullptr;
    if (error_) {
        auto err = error_;
        error_ = nullptr;
        std::rethrow_exception(err);
    }
}

std::size_t default_worker_count(std::size_t fallback) {
    if (const char* env = std::getenv("SCANPROP_THREADS")) {
        try {
            const long value = std::stol(env);
            if (value >= 1) return static_cast<std::size_t>(value);
        } catch (const std::exception&) {
        }
    }
    return fallback;
}

}  // namespace scanprop
