#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "causal_model.hpp"
#include "graph.hpp"
#include "bandit.hpp"
#include "cn_ucb.hpp"
#include "instance_gen.hpp"
#include "instance_json.hpp"
#include "harness.hpp"
