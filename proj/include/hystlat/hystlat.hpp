#pragma once

#include "hystlat/analysis.hpp"
#include "hystlat/config.hpp"
#include "hystlat/errors.hpp"
#include "hystlat/experiments.hpp"
#include "hystlat/figures.hpp"
#include "hystlat/integrators.hpp"
#include "hystlat/lattice.hpp"
#include "hystlat/output.hpp"
#include "hystlat/parallel.hpp"
#include "hystlat/tsit5.hpp"
#include "hystlat/version.hpp"
