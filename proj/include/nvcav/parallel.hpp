/*
 * Copyright 2026 The nvcav Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NVCAV_PARALLEL_HPP
#define NVCAV_PARALLEL_HPP

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace nvcav {

/**
 * Fixed-size worker pool running one data-parallel loop at a time.
 *
 * Work is split into contiguous chunks whose boundaries depend only on the
 * range, never on the number of workers, so that any reduction done per
 * chunk and combined in chunk order is bitwise reproducible.
 */
class worker_pool
{
public:
    explicit worker_pool(unsigned n_threads = 1)
        : m_n(n_threads == 0 ? 1 : n_threads)
    {
        for (unsigned t = 1; t < m_n; ++t) {
            m_threads.emplace_back([this] { worker_loop(); });
        }
    }

    worker_pool(const worker_pool&) = delete;
    worker_pool& operator=(const worker_pool&) = delete;

    ~worker_pool()
    {
        {
            std::lock_guard lock(m_mutex);
            m_stop = true;
        }
        m_wake.notify_all();
        for (auto& t : m_threads) {
            t.join();
        }
    }

    unsigned size() const { return m_n; }

    /// Calls fn(chunk_begin, chunk_end) over [begin, end) split into n_chunks.
    void for_chunks(long begin, long end, long n_chunks,
                    const std::function<void(long, long)>& fn)
    {
        if (end <= begin) {
            return;
        }
        n_chunks = std::max<long>(1, std::min<long>(n_chunks, end - begin));
        if (m_n == 1 || n_chunks == 1) {
            for (long c = 0; c < n_chunks; ++c) {
                fn(chunk_lo(begin, end, n_chunks, c), chunk_lo(begin, end, n_chunks, c + 1));
            }
            return;
        }
        {
            std::lock_guard lock(m_mutex);
            m_job = &fn;
            m_begin = begin;
            m_end = end;
            m_chunks = n_chunks;
            m_next = 0;
            m_pending = n_chunks;
            m_error = nullptr;
            ++m_generation;
        }
        m_wake.notify_all();
        run_chunks();
        std::unique_lock lock(m_mutex);
        m_done.wait(lock, [this] { return m_pending == 0; });
        m_job = nullptr;
        if (m_error) {
            std::rethrow_exception(m_error);
        }
    }

    /// Default chunking: a fixed chunk count independent of the pool size.
    void for_range(long begin, long end, const std::function<void(long, long)>& fn)
    {
        for_chunks(begin, end, default_chunks, fn);
    }

    static constexpr long default_chunks = 16;

    static long chunk_lo(long begin, long end, long n_chunks, long c)
    {
        return begin + (end - begin) * c / n_chunks;
    }

private:
    void run_chunks()
    {
        for (;;) {
            long c;
            {
                std::lock_guard lock(m_mutex);
                if (m_job == nullptr || m_next >= m_chunks) {
                    return;
                }
                c = m_next++;
            }
            try {
                (*m_job)(chunk_lo(m_begin, m_end, m_chunks, c),
                         chunk_lo(m_begin, m_end, m_chunks, c + 1));
            } catch (...) {
                std::lock_guard lock(m_mutex);
                if (!m_error) {
                    m_error = std::current_exception();
                }
            }
            std::lock_guard lock(m_mutex);
            if (--m_pending == 0) {
                m_done.notify_all();
            }
        }
    }

    void worker_loop()
    {
        unsigned long seen = 0;
        for (;;) {
            {
                std::unique_lock lock(m_mutex);
                m_wake.wait(lock, [&] { return m_stop || m_generation != seen; });
                if (m_stop) {
                    return;
                }
                seen = m_generation;
            }
            run_chunks();
        }
    }

    unsigned m_n;
    std::vector<std::thread> m_threads;
    std::mutex m_mutex;
    std::condition_variable m_wake;
    std::condition_variable m_done;
    const std::function<void(long, long)>* m_job = nullptr;
    long m_begin = 0;
    long m_end = 0;
    long m_chunks = 0;
    long m_next = 0;
    long m_pending = 0;
    unsigned long m_generation = 0;
    bool m_stop = false;
    std::exception_ptr m_error;
};

/// Thread count from NVCAV_THREADS if set, otherwise the fallback.
inline unsigned threads_from_env(unsigned fallback)
{
    if (const char* s = std::getenv("NVCAV_THREADS")) {
        try {
            const int v = std::stoi(s);
            if (v > 0) {
                return static_cast<unsigned>(v);
            }
        } catch (...) {
        }
    }
    return fallback;
}

} // namespace nvcav

#endif
