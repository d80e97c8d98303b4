#ifndef HYDROSCALE_HYDROSCALE_HPP
#define HYDROSCALE_HYDROSCALE_HPP

#include "conductance.hpp"
#include "csv.hpp"
#include "diagnostics.hpp"
#include "energy.hpp"
#include "ensemble.hpp"
#include "exact.hpp"
#include "exclusion.hpp"
#include "experiments.hpp"
#include "generator.hpp"
#include "hydro.hpp"
#include "lattice.hpp"
#include "random.hpp"
#include "sum_tree.hpp"

#endif  // HYDROSCALE_HYDROSCALE_HPP
