#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace evosynth {

/// Structured runtime error. Every failure the library raises deliberately is
/// one of these; the CLI maps them to exit code 1 (or 2 for config errors).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void append_parts(std::ostringstream&) {}
template <class T, class... Rest>
void append_parts(std::ostringstream& os, T&& first, Rest&&... rest) {
    os << std::forward<T>(first);
    append_parts(os, std::forward<Rest>(rest)...);
}
}  // namespace detail

/// Build a message from the parts and throw Error.
template <class... Parts>
[[noreturn]] void fail(Parts&&... parts) {
    std::ostringstream os;
    detail::append_parts(os, std::forward<Parts>(parts)...);
    throw Error(os.str());
}

/// Throw Error(msg...) unless cond holds.
template <class... Parts>
void require(bool cond, Parts&&... parts) {
    if (!cond) fail(std::forward<Parts>(parts)...);
}

}  // namespace evosynth
