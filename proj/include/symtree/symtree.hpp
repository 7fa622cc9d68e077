#pragma once

// Umbrella header for the library.

#include "symtree/baselines.hpp"
#include "symtree/casestudies.hpp"
#include "symtree/dataset.hpp"
#include "symtree/expr.hpp"
#include "symtree/formulation.hpp"
#include "symtree/learn.hpp"
#include "symtree/milp.hpp"
#include "symtree/solver.hpp"
#include "symtree/tree.hpp"
