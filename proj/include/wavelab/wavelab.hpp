#pragma once

#include "wavelab/discretization.hpp"
#include "wavelab/energy.hpp"
#include "wavelab/error.hpp"
#include "wavelab/evolution.hpp"
#include "wavelab/grid.hpp"
#include "wavelab/lab.hpp"
#include "wavelab/polynomial.hpp"
#include "wavelab/reaction.hpp"
#include "wavelab/spectral.hpp"
#include "wavelab/stationary.hpp"
#include "wavelab/tridiagonal.hpp"
