#pragma once

#include "fedmdp/types.hpp"
#include "fedmdp/rng.hpp"
#include "fedmdp/mdp.hpp"
#include "fedmdp/fed_env.hpp"
#include "fedmdp/fed_algo.hpp"
#include "fedmdp/checks.hpp"
#include "fedmdp/harness.hpp"
#include "fedmdp/config.hpp"
