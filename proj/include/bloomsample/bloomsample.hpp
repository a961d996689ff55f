#pragma once

#include "bloomsample/baselines.hpp"
#include "bloomsample/bloom_filter.hpp"
#include "bloomsample/errors.hpp"
#include "bloomsample/estimate.hpp"
#include "bloomsample/hashing.hpp"
#include "bloomsample/op_counters.hpp"
#include "bloomsample/sample_tree.hpp"
#include "bloomsample/tree_plan.hpp"
