#pragma once

// Umbrella header.

#include "nlgrade/error.hpp"
#include "nlgrade/parallel.hpp"
#include "nlgrade/mesh.hpp"
#include "nlgrade/material1d.hpp"
#include "nlgrade/filters.hpp"
#include "nlgrade/fem.hpp"
#include "nlgrade/problem.hpp"
#include "nlgrade/sensitivity.hpp"
#include "nlgrade/mma.hpp"
#include "nlgrade/optimizer.hpp"
#include "nlgrade/problems.hpp"
#include "nlgrade/postprocess.hpp"
#include "nlgrade/config.hpp"
#include "nlgrade/gradcheck.hpp"
#include "nlgrade/studies.hpp"
