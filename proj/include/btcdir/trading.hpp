#pragma once

#include "btcdir/trading/backtest.hpp"
