#pragma once

#include "bench.hpp"
#include "bitsource.hpp"
#include "engines.hpp"
#include "oracle.hpp"
#include "replay.hpp"
#include "sampling.hpp"
#include "stats.hpp"
#include "task_pool.hpp"
#include "treestore.hpp"
#include "verify.hpp"
