#pragma once

#include "btcdir/ingestion/calendar.hpp"
#include "btcdir/ingestion/csv.hpp"
#include "btcdir/ingestion/frame.hpp"
#include "btcdir/ingestion/impute.hpp"
#include "btcdir/ingestion/manifest.hpp"
