#pragma once

#include "mobius/cumulants.hpp"
#include "mobius/eval.hpp"
#include "mobius/io.hpp"
#include "mobius/lattice.hpp"
#include "mobius/mia.hpp"
#include "mobius/netmodel.hpp"
#include "mobius/random.hpp"
#include "mobius/routing.hpp"
#include "mobius/solver.hpp"
#include "mobius/sparse.hpp"
#include "mobius/stats.hpp"
