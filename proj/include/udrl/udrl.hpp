// Umbrella header.
#pragma once

#include "udrl/core.hpp"
#include "udrl/segments.hpp"
#include "udrl/values.hpp"
#include "udrl/recursion.hpp"
#include "udrl/bounds.hpp"
#include "udrl/domains.hpp"
#include "udrl/random.hpp"
