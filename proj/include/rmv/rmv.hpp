#pragma once

#include "rmv/cadlag.hpp"
#include "rmv/coefficients.hpp"
#include "rmv/common.hpp"
#include "rmv/config.hpp"
#include "rmv/convex.hpp"
#include "rmv/domain.hpp"
#include "rmv/drivers.hpp"
#include "rmv/experiments.hpp"
#include "rmv/mckean.hpp"
#include "rmv/measure.hpp"
#include "rmv/rng.hpp"
#include "rmv/skorokhod.hpp"
#include "rmv/wasserstein.hpp"
