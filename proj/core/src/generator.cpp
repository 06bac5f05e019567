#include "abon/generator.hpp"

#include "abon/errors.hpp"

namespace abon {

void validate_request(const GenerationRequest& req) {
  if (req.temperature < 0.0) {
    throw MisuseError("GenerationRequest: temperature must be >= 0");
  }
  if (req.token_budget < 1) {
    throw MisuseError("GenerationRequest: token_budget must be >= 1");
  }
}

}  // namespace abon
