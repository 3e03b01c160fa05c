#pragma once

// Numerical core in one include. The runner layer lives under correlab/cli/.

#include "correlab/types.hpp"
#include "correlab/lattice.hpp"
#include "correlab/interaction.hpp"
#include "correlab/operators.hpp"
#include "correlab/spectral.hpp"
#include "correlab/hamiltonian.hpp"
#include "correlab/quadrature.hpp"
#include "correlab/parallel.hpp"
#include "correlab/thermal.hpp"
#include "correlab/dynamics.hpp"
#include "correlab/contour.hpp"
#include "correlab/fit.hpp"
#include "correlab/theorem.hpp"
