#pragma once

// Umbrella header for the whole library.

#include "cuqgnn/error.hpp"
#include "cuqgnn/graphcore/generators.hpp"
#include "cuqgnn/graphcore/graph.hpp"
#include "cuqgnn/models/checkpoint.hpp"
#include "cuqgnn/models/model.hpp"
#include "cuqgnn/trainer/train.hpp"
#include "cuqgnn/eval/report_csv.hpp"
#include "cuqgnn/eval/verify.hpp"
