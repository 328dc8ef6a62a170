#pragma once

#include "diraclab/algebra.hpp"
#include "diraclab/analysis.hpp"
#include "diraclab/continuum.hpp"
#include "diraclab/fit.hpp"
#include "diraclab/greens.hpp"
#include "diraclab/io.hpp"
#include "diraclab/lattice.hpp"
#include "diraclab/parallel.hpp"
#include "diraclab/potentials.hpp"
#include "diraclab/rng.hpp"
#include "diraclab/transfer.hpp"
