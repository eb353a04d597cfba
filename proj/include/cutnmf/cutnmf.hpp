#pragma once

// Matrix-completion toolkit for personalized recommendation: adaptive
// clipped-imputation NMF, greedy coordinate-descent NNLS subproblem solver,
// recommender evaluation metrics, MovieLens/synthetic data handling,
// comparison baselines, and a reproducible experiment harness.

#include "cutnmf/baselines.hpp"
#include "cutnmf/data_io.hpp"
#include "cutnmf/engine.hpp"
#include "cutnmf/harness.hpp"
#include "cutnmf/matrix.hpp"
#include "cutnmf/metrics.hpp"
#include "cutnmf/nnls.hpp"
#include "cutnmf/ops.hpp"
#include "cutnmf/ratings.hpp"
#include "cutnmf/rng.hpp"
