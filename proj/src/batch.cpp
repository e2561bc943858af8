#include <batchfact/batch.hpp>

#include <algorithm>
#include <cstdlib>

namespace batchfact {

namespace {

std::atomic<std::size_t> configured_threads{0};

std::size_t default_threads() {
    if (const char* env = std::getenv("BATCHFACT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

} // namespace

std::size_t num_threads() {
    const auto n = configured_threads.load();
    return n > 0 ? n : default_threads();
}

void set_num_threads(std::size_t n) {
    configured_threads = n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, std::size_t threads) {
    if (threads == 0)
        threads = num_threads();
    threads = std::min(threads, count);

    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }

    // dynamic distribution; which worker handles an entry never affects its result
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++)
            body(i);
    };

    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
}

} // namespace batchfact
