#include "topicflow/errors.hpp"

namespace topicflow {

void Warnings::append(const Warnings& other)
{
    messages.insert(messages.end(), other.messages.begin(), other.messages.end());
}

void ensure(bool condition, const std::string& what)
{
    if (!condition) {
        throw InvariantError(what);
    }
}

}  // namespace topicflow
