#pragma once

#include "btcdir/reduce/pca.hpp"
