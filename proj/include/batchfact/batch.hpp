#pragma once

//
// Batch execution: every entry of a batch is processed by exactly one worker,
// sequentially, so results do not depend on the number of workers.
//

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <batchfact/matrix.hpp>

namespace batchfact {

// error raised by a per-entry operation, tagged with the entry's batch index
class batch_error : public std::runtime_error {
public:
    batch_error(std::size_t index, const std::string& what)
        : std::runtime_error("batch entry " + std::to_string(index) + ": " + what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Worker count used by batch routines. Resolution order: set_num_threads(),
// the BATCHFACT_THREADS environment variable, hardware concurrency.
std::size_t num_threads();
void set_num_threads(std::size_t n);

// runs body(i) for i in [0, count) on up to `threads` workers
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

//
// out[i] = op(in[i]). The first failing entry (lowest index) is rethrown as
// batch_error carrying its index.
//
template <typename In, typename Op>
auto batch_apply(std::span<const In> in, Op&& op, std::size_t threads = 0) {
    using Out = std::invoke_result_t<Op&, const In&>;

    std::vector<std::optional<Out>> slots(in.size());
    std::vector<std::exception_ptr> errors(in.size());
    std::atomic<bool> failed{false};

    parallel_for(
        in.size(),
        [&](std::size_t i) {
            try {
                slots[i].emplace(op(in[i]));
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        },
        threads);

    if (failed) {
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (!errors[i])
                continue;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw batch_error(i, e.what());
            } catch (...) {
                throw batch_error(i, "unknown error");
            }
        }
    }

    std::vector<Out> out;
    out.reserve(in.size());
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

template <typename T, typename Op>
auto batch_apply(const MatrixBatch<T>& batch, Op&& op, std::size_t threads = 0) {
    return batch_apply(batch.entries(), std::forward<Op>(op), threads);
}

} // namespace batchfact
