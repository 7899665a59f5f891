#pragma once

#include <stdexcept>
#include <string>

namespace dccert {

struct EmptySetError : std::runtime_error {
    explicit EmptySetError(const std::string& m = "empty set") : std::runtime_error(m) {}
};
struct UnboundedSetError : std::runtime_error {
    explicit UnboundedSetError(const std::string& m = "unbounded set") : std::runtime_error(m) {}
};
struct NotInteriorError : std::runtime_error {
    explicit NotInteriorError(const std::string& m = "point not interior") : std::runtime_error(m) {}
};
struct InfiniteValueError : std::runtime_error {
    explicit InfiniteValueError(const std::string& m = "function value is infinite")
        : std::runtime_error(m) {}
};
struct NumericFailureError : std::runtime_error {
    explicit NumericFailureError(const std::string& m = "numeric failure") : std::runtime_error(m) {}
};
struct NotRepresentableError : std::runtime_error {
    explicit NotRepresentableError(const std::string& m = "not representable in supported kinds")
        : std::runtime_error(m) {}
};
struct InfeasiblePointError : std::runtime_error {
    explicit InfeasiblePointError(const std::string& m = "point is infeasible")
        : std::runtime_error(m) {}
};
struct NotDifferentiableError : std::runtime_error {
    explicit NotDifferentiableError(const std::string& m = "function not differentiable here")
        : std::runtime_error(m) {}
};
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& m = "validation failed") : std::runtime_error(m) {}
};
struct DegenerateConeError : std::runtime_error {
    explicit DegenerateConeError(const std::string& m = "degenerate cone") : std::runtime_error(m) {}
};
struct InputError : std::runtime_error {
    explicit InputError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace dccert
