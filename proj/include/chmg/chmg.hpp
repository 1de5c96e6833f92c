#pragma once

#include "chmg/errors.hpp"
#include "chmg/mesh.hpp"
#include "chmg/quadrature.hpp"
#include "chmg/sparse.hpp"
#include "chmg/dense.hpp"
#include "chmg/linear_operator.hpp"
#include "chmg/minres.hpp"
#include "chmg/assembly.hpp"
#include "chmg/multigrid.hpp"
#include "chmg/jacobian.hpp"
#include "chmg/projection.hpp"
#include "chmg/stepper.hpp"
#include "chmg/spectrum.hpp"
#include "chmg/io.hpp"
