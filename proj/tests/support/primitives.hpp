#pragma once

#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace testsupport {

/// Every differentiable primitive of the tensor module.
const std::vector<std::string>& primitive_names();

/// Finite-difference check of one primitive at a random point drawn from `seed`.
GradCheck check_primitive(const std::string& name, std::uint64_t seed);

}  // namespace testsupport
