#pragma once

#include "btcdir/audit/leakage.hpp"
#include "btcdir/audit/scope.hpp"
