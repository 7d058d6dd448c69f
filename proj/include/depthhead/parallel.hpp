#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace depthhead {

// Worker count: hardware concurrency, capped by DEPTHHEAD_THREADS.
inline unsigned worker_count() {
    static const unsigned n = [] {
        unsigned hw = std::thread::hardware_concurrency();
        if (hw == 0) hw = 1;
        if (const char* env = std::getenv("DEPTHHEAD_THREADS")) {
            const long cap = std::strtol(env, nullptr, 10);
            if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
        }
        return hw;
    }();
    return n;
}

namespace detail {

// Minimal persistent pool. Jobs are (begin,end) index ranges; every result
// a caller can observe is written to disjoint locations per index, so the
// outcome does not depend on how ranges land on threads.
class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool(worker_count());
        return pool;
    }

    void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
        if (n == 0) return;
        const std::size_t parts = std::min<std::size_t>(workers_.size() + 1, n);
        if (parts <= 1 || in_pool()) {
            body(0, n);  // nested calls degrade to serial
            return;
        }
        in_pool() = true;
        std::unique_lock lock(mutex_);
        body_ = &body;
        total_ = n;
        parts_ = parts;
        next_part_ = 0;
        pending_ = parts;
        ++generation_;
        lock.unlock();
        wake_.notify_all();
        work();  // caller participates
        lock.lock();
        done_.wait(lock, [&] { return pending_ == 0; });
        body_ = nullptr;
        in_pool() = false;
    }

    ~ThreadPool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
        }
        wake_.notify_all();
        for (auto& t : workers_) t.join();
    }

private:
    explicit ThreadPool(unsigned n) {
        for (unsigned i = 0; i + 1 < n; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    static bool& in_pool() {
        thread_local bool flag = false;
        return flag;
    }

    void worker_loop() {
        in_pool() = true;
        std::uint64_t seen = 0;
        for (;;) {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            lock.unlock();
            work();
        }
    }

    void work() {
        for (;;) {
            std::size_t part;
            {
                std::lock_guard lock(mutex_);
                if (next_part_ >= parts_) return;
                part = next_part_++;
            }
            const std::size_t chunk = (total_ + parts_ - 1) / parts_;
            const std::size_t begin = part * chunk;
            const std::size_t end = std::min(total_, begin + chunk);
            if (begin < end) (*body_)(begin, end);
            {
                std::lock_guard lock(mutex_);
                if (--pending_ == 0) done_.notify_all();
            }
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
    std::size_t total_ = 0;
    std::size_t parts_ = 0;
    std::size_t next_part_ = 0;
    std::size_t pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

}  // namespace detail

// Runs body(i) for i in [0, n). Bodies must write only to per-index state.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& body) {
    detail::ThreadPool::instance().run(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) body(i);
    });
}

// Range flavor for coarse chunking (one im2col scratch buffer per range).
template <typename Fn>
void parallel_ranges(std::size_t n, Fn&& body) {
    detail::ThreadPool::instance().run(n, body);
}

}  // namespace depthhead
