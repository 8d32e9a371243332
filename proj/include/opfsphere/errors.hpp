#pragma once

#include <stdexcept>
#include <string>

namespace opf {

// Every failure raised by the library derives from Error; the kind lets the
// CLI map failures to exit codes without string matching.
enum class ErrorKind {
    domain,           // argument outside its mathematical domain
    out_of_hemisphere,
    infeasible,       // shrink / epsilon / constants infeasible
    resource_cap,
    corrupt_cache,
    hull_infeasible,
    invalid_selection,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace opf
