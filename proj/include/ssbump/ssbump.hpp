#pragma once

// Umbrella header: the whole library.

#include "ssbump/bump.hpp"
#include "ssbump/engine.hpp"
#include "ssbump/geo.hpp"
#include "ssbump/protocol.hpp"
#include "ssbump/radio.hpp"
#include "ssbump/report.hpp"
#include "ssbump/rng.hpp"
#include "ssbump/scenario.hpp"
#include "ssbump/traffic.hpp"
