#pragma once

#include "htune/harness/config.hpp"
#include "htune/harness/presets.hpp"
#include "htune/harness/run.hpp"
