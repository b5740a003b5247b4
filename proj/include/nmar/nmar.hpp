#ifndef NMAR_NMAR_HPP
#define NMAR_NMAR_HPP

#include "nmar/distributions.hpp"
#include "nmar/error.hpp"
#include "nmar/estimation.hpp"
#include "nmar/identifiability.hpp"
#include "nmar/io.hpp"
#include "nmar/model.hpp"
#include "nmar/optimize.hpp"
#include "nmar/oracle.hpp"
#include "nmar/rng.hpp"
#include "nmar/selection.hpp"
#include "nmar/sim.hpp"

#endif  // NMAR_NMAR_HPP
