#pragma once

#include "diffvote/checks.hpp"
#include "diffvote/error.hpp"
#include "diffvote/experiments.hpp"
#include "diffvote/losses.hpp"
#include "diffvote/numeric.hpp"
#include "diffvote/optimizer.hpp"
#include "diffvote/oracles.hpp"
#include "diffvote/preferences.hpp"
#include "diffvote/rng.hpp"
