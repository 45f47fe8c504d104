// Umbrella header: the whole library in one include.
#pragma once

#include "pda/analysis.hpp"
#include "pda/errors.hpp"
#include "pda/harness.hpp"
#include "pda/io.hpp"
#include "pda/mechanism.hpp"
#include "pda/model.hpp"
#include "pda/rational.hpp"
#include "pda/rng.hpp"
#include "pda/shapley.hpp"
#include "pda/welfare.hpp"
