#pragma once

// Umbrella header: adaptive scattered data fitting with truncated
// hierarchical B-splines and locally chosen polynomial degrees.

#include "thbfit/adaptive.hpp"
#include "thbfit/dataset.hpp"
#include "thbfit/densela.hpp"
#include "thbfit/domain.hpp"
#include "thbfit/hierarchy.hpp"
#include "thbfit/io.hpp"
#include "thbfit/knot_vector.hpp"
#include "thbfit/localfit.hpp"
#include "thbfit/poly_convert.hpp"
#include "thbfit/polynomial.hpp"
#include "thbfit/tensor_space.hpp"
#include "thbfit/thb.hpp"
