#pragma once

#include "btcdir/features/dataset.hpp"
#include "btcdir/features/indicators.hpp"
