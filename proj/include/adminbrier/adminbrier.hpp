#pragma once

#include "adminbrier/bench.hpp"
#include "adminbrier/censoring.hpp"
#include "adminbrier/core.hpp"
#include "adminbrier/io.hpp"
#include "adminbrier/losses.hpp"
#include "adminbrier/metrics.hpp"
#include "adminbrier/mlp.hpp"
#include "adminbrier/models.hpp"
#include "adminbrier/random.hpp"
#include "adminbrier/simgen.hpp"
