#pragma once

#include "pushnet/appr.hpp"
#include "pushnet/bench.hpp"
#include "pushnet/checkpoint.hpp"
#include "pushnet/config.hpp"
#include "pushnet/coverage.hpp"
#include "pushnet/dataset.hpp"
#include "pushnet/dense_matrix.hpp"
#include "pushnet/error.hpp"
#include "pushnet/exact_ppr.hpp"
#include "pushnet/experiment.hpp"
#include "pushnet/graph.hpp"
#include "pushnet/lpmp.hpp"
#include "pushnet/metrics.hpp"
#include "pushnet/neural.hpp"
#include "pushnet/parallel.hpp"
#include "pushnet/propagation.hpp"
#include "pushnet/sparse_matrix.hpp"
#include "pushnet/split.hpp"
#include "pushnet/synthetic.hpp"
#include "pushnet/training.hpp"
#include "pushnet/variant.hpp"
