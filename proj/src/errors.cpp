#include "bio/errors.hpp"

#include <utility>

namespace bio {

NumericalError::NumericalError(std::string block, const std::string& what)
    : Error("[" + block + "] " + what), block_(std::move(block)) {}

ExternalError::ExternalError(const std::string& what, std::string diagnostics)
    : Error(what), diagnostics_(std::move(diagnostics)) {}

}  // namespace bio
