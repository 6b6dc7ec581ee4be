#pragma once

#include "skewjoin/core.hpp"
#include "skewjoin/error.hpp"
#include "skewjoin/experiment.hpp"
#include "skewjoin/freqclass.hpp"
#include "skewjoin/hash.hpp"
#include "skewjoin/io.hpp"
#include "skewjoin/planner.hpp"
#include "skewjoin/rational.hpp"
#include "skewjoin/selectivity.hpp"
#include "skewjoin/simulator.hpp"
