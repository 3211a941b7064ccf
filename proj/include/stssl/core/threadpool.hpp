#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace stssl {

/// Fixed-size worker pool for data-parallel loops. Work items write only to
/// their own output slot, so scheduling order cannot change results; callers
/// do any reductions in index order afterwards.
class ThreadPool {
public:
    explicit ThreadPool(int threads) {
        if (threads < 1) threads = 1;
        for (int i = 0; i < threads - 1; ++i) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    int size() const { return static_cast<int>(workers_.size()) + 1; }

    void parallel_for(int n, const std::function<void(int)>& fn) {
        if (n <= 0) return;
        if (workers_.empty() || n == 1) {
            for (int i = 0; i < n; ++i) fn(i);
            return;
        }
        auto job = std::make_shared<Job>();
        job->n = n;
        job->fn = fn;
        {
            std::lock_guard<std::mutex> lk(mu_);
            job_ = job;
            ++job_counter_;
        }
        cv_.notify_all();
        run_job(*job);
        while (job->done.load(std::memory_order_acquire) < n) std::this_thread::yield();
        {
            std::lock_guard<std::mutex> lk(mu_);
            job_.reset();
        }
    }

    /// Process-wide pool. Honors STSSL_THREADS and STSSL_DETERMINISTIC=1
    /// (the latter forces a single worker).
    static ThreadPool& global() {
        static ThreadPool pool(global_thread_count());
        return pool;
    }

    static int global_thread_count() {
        if (const char* det = std::getenv("STSSL_DETERMINISTIC"); det && det[0] == '1') return 1;
        if (const char* env = std::getenv("STSSL_THREADS")) {
            int n = std::atoi(env);
            if (n >= 1) return n;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw ? static_cast<int>(hw) : 1;
    }

private:
    struct Job {
        int n = 0;
        std::function<void(int)> fn;
        std::atomic<int> next{0};
        std::atomic<int> done{0};
    };

    static void run_job(Job& job) {
        int i;
        while ((i = job.next.fetch_add(1)) < job.n) {
            job.fn(i);
            job.done.fetch_add(1, std::memory_order_release);
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        while (true) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stop_ || (job_ && job_counter_ != seen); });
                if (stop_) return;
                seen = job_counter_;
                job = job_;
            }
            if (job) run_job(*job);
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::shared_ptr<Job> job_;
    bool stop_ = false;
    std::uint64_t job_counter_ = 0;
};

}  // namespace stssl
