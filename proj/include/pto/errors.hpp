// Exception taxonomy shared by all modules.
//
// Precondition violations throw std::invalid_argument.  Everything that can
// fail at runtime for numerical or configuration reasons gets its own type so
// the CLI can map failures onto distinct exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace pto {

// A config file failed to parse, violated the schema, or carried values that
// no module accepts.  Carries the offending field path where applicable.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A reduced linear system was singular (e.g. no Dirichlet pressure node, or
// missing displacement supports).
class SingularSystemError : public std::runtime_error {
public:
    explicit SingularSystemError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative process (linear solver or MMA subproblem) exhausted its
// iteration budget.  Carries the final residual in the message.
class IterationLimitError : public std::runtime_error {
public:
    explicit IterationLimitError(const std::string& what) : std::runtime_error(what) {}
};

// A gradient routine was handed states that were computed for a different
// density field than the one supplied (stale-state detection).
class ConsistencyError : public std::runtime_error {
public:
    explicit ConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

// An objective became degenerate (e.g. zero strain energy: no load path).
class DegenerateObjectiveError : public std::runtime_error {
public:
    explicit DegenerateObjectiveError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pto
