#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace topicflow {

/// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input data that cannot be processed. Maps to CLI exit code 3.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An internal invariant failed. Maps to CLI exit code 4.
class InvariantError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Non-fatal diagnostics collected during a computation.
struct Warnings {
    std::vector<std::string> messages;

    void add(std::string message) { messages.push_back(std::move(message)); }
    void append(const Warnings& other);
    [[nodiscard]] bool empty() const noexcept { return messages.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return messages.size(); }
};

inline void warn(Warnings* sink, std::string message)
{
    if (sink != nullptr) {
        sink->add(std::move(message));
    }
}

/// Throws InvariantError when `condition` is false.
void ensure(bool condition, const std::string& what);

}  // namespace topicflow
