#pragma once

#include "framecast/core.hpp"
#include "framecast/fusion.hpp"
#include "framecast/io.hpp"
#include "framecast/motion.hpp"
#include "framecast/resample.hpp"
#include "framecast/simulator.hpp"
#include "framecast/synthesis.hpp"
