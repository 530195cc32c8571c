// SPDX-License-Identifier: Apache-2.0

#ifndef WHLISA_WHLISA_HPP
#define WHLISA_WHLISA_HPP

#include "whlisa/baselines.hpp"
#include "whlisa/channel.hpp"
#include "whlisa/config.hpp"
#include "whlisa/experiment.hpp"
#include "whlisa/hybrid.hpp"
#include "whlisa/lisa.hpp"
#include "whlisa/metrics.hpp"
#include "whlisa/numerics.hpp"

#endif
