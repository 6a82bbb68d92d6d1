#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File or stream level failure (missing file, malformed container).
class IoError : public Error {
public:
    using Error::Error;
};

/// Input rejected by a contract check; message names the offending field.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Syntax error with a byte offset into the offending text.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : Error(msg + " (at offset " + std::to_string(position) + ")"), position_(position) {}
    explicit ParseError(const std::string& msg) : Error(msg), position_(0) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// LLM or embedding provider failure after retries.
class ProviderError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Applies fn to every index in [0, n) across up to `jobs` threads and
/// collects results in index order, so output is deterministic regardless
/// of scheduling. jobs <= 1 runs inline.
template <typename Result>
std::vector<Result> parallel_map(std::size_t n, unsigned jobs,
                                 const std::function<Result(std::size_t)>& fn) {
    std::vector<Result> out(n);
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    unsigned count = std::min<std::size_t>(jobs, n);
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    for (unsigned w = 0; w < count; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    out[i] = fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (failed.load() && first_error) std::rethrow_exception(first_error);
    return out;
}

}  // namespace kg
