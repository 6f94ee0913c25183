#pragma once

#include "htune/core.hpp"
#include "htune/harness.hpp"
#include "htune/metrics.hpp"
#include "htune/objectives.hpp"
#include "htune/optimizers.hpp"
#include "htune/probes.hpp"
#include "htune/stability.hpp"
