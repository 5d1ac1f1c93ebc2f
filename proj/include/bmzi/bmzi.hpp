#pragma once

#include "bmzi/units.hpp"
#include "bmzi/crystal_optics.hpp"
#include "bmzi/mode_algebra.hpp"
#include "bmzi/spectrum.hpp"
#include "bmzi/analytic_rates.hpp"
#include "bmzi/quadrature.hpp"
#include "bmzi/spectral_engine.hpp"
#include "bmzi/periodogram.hpp"
#include "bmzi/least_squares.hpp"
#include "bmzi/fringe_fit.hpp"
#include "bmzi/experiment.hpp"
#include "bmzi/fringe_io.hpp"
#include "bmzi/recipes.hpp"
