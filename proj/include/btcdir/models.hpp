#pragma once

#include "btcdir/models/boosting.hpp"
#include "btcdir/models/classifier.hpp"
#include "btcdir/models/hyperparams.hpp"
#include "btcdir/models/naive_bayes.hpp"
#include "btcdir/models/random_forest.hpp"
#include "btcdir/models/svm.hpp"
