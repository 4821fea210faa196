#pragma once

#include "poincare/error.hpp"
#include "poincare/geometry.hpp"
#include "poincare/quadrature.hpp"
#include "poincare/scalar_bounds.hpp"
#include "poincare/vector_bounds.hpp"
#include "poincare/mesh.hpp"
#include "poincare/interpolation.hpp"
#include "poincare/fields.hpp"
#include "poincare/fem_oracle.hpp"
#include "poincare/cell_io.hpp"
#include "poincare/reproduce.hpp"
