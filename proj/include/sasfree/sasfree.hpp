#pragma once

#include "boundary.hpp"
#include "error.hpp"
#include "fields.hpp"
#include "free_group.hpp"
#include "harness.hpp"
#include "kernel.hpp"
#include "limit_process.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "rational.hpp"
#include "stable.hpp"
#include "stats.hpp"
#include "subgraphs.hpp"
