#pragma once

#include <string>

#include "nlgrade/fem.hpp"
#include "nlgrade/mesh.hpp"

namespace nlgrade {

/// A discretized compliance problem: geometry, design mask, supports/loads and
/// the material volume budget V (design share plus all non-design material).
struct DesignProblem {
  std::string name;
  StructuredMesh mesh;
  ElementMask mask;
  BoundaryConditions bcs;
  double volume_bound = 0.0;
  double volume_fraction = 0.0;
};

}  // namespace nlgrade
