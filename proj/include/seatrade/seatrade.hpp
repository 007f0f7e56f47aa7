#pragma once

#include "seatrade/calendar.hpp"
#include "seatrade/csv.hpp"
#include "seatrade/error.hpp"
#include "seatrade/eval.hpp"
#include "seatrade/extrap.hpp"
#include "seatrade/feature_matrix.hpp"
#include "seatrade/gbt.hpp"
#include "seatrade/mc.hpp"
#include "seatrade/panel.hpp"
#include "seatrade/raster.hpp"
#include "seatrade/rgrid.hpp"
