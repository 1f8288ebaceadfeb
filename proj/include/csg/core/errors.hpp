#pragma once

#include <stdexcept>
#include <string>

namespace csg {

/// Malformed input: wrong dimensions, out-of-range parameters, bad files.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Training diverged or produced non-finite values.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The solver could not produce a usable answer (iteration cap, infeasible
/// surrogate problem where recourse should be complete).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A request exceeded a configured size or time budget.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace csg
