#pragma once

#include "wattcast/cleaning.hpp"
#include "wattcast/dataset.hpp"
#include "wattcast/experiment/grid.hpp"
#include "wattcast/experiment/matrix.hpp"
#include "wattcast/experiment/metrics.hpp"
#include "wattcast/experiment/report.hpp"
#include "wattcast/experiment/search.hpp"
#include "wattcast/experiment/train.hpp"
#include "wattcast/models/forecaster.hpp"
#include "wattcast/models/spec.hpp"
#include "wattcast/nn/adam.hpp"
#include "wattcast/nn/checkpoint.hpp"
#include "wattcast/nn/ops.hpp"
#include "wattcast/nn/tape.hpp"
#include "wattcast/nn/tensor.hpp"
#include "wattcast/series.hpp"
#include "wattcast/synth.hpp"
#include "wattcast/time.hpp"
