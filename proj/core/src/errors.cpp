#include "defhom/errors.hpp"

#include <fmt/format.h>

namespace defhom {

MeshTooFine::MeshTooFine(std::size_t requested, std::size_t cap)
    : Error(fmt::format("mesh would need {} nodes, cap is {}", requested, cap)),
      requested_(requested),
      cap_(cap) {}

ParseError::ParseError(std::string message, std::size_t offset, std::vector<std::string> expected)
    : Error(std::move(message)), offset_(offset), expected_(std::move(expected)) {}

NoConvergence::NoConvergence(std::string message, std::vector<double> residuals,
                             std::vector<double> factors)
    : Error(std::move(message)), residuals_(std::move(residuals)), factors_(std::move(factors)) {}

MembershipViolation::MembershipViolation(std::string defect_id, std::string clause)
    : Error(fmt::format("defect '{}' is not admissible: {}", defect_id, clause)),
      defect_id_(std::move(defect_id)) {}

}  // namespace defhom
