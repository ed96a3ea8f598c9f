#pragma once

#include "btcdir/validation/folds.hpp"
#include "btcdir/validation/metrics.hpp"
#include "btcdir/validation/nested_cv.hpp"
#include "btcdir/validation/search.hpp"
