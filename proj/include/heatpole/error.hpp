#pragma once

#include <stdexcept>
#include <string>

namespace heatpole {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a numeric verdict disagrees with a known exact verdict, or when a
// property that the theory guarantees is violated by computed data.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace heatpole
