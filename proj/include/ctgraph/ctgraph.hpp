#pragma once

#include "ctgraph/backward.hpp"
#include "ctgraph/checkpoint.hpp"
#include "ctgraph/config.hpp"
#include "ctgraph/eigen_sym.hpp"
#include "ctgraph/error.hpp"
#include "ctgraph/experiments.hpp"
#include "ctgraph/graph_builder.hpp"
#include "ctgraph/matrix.hpp"
#include "ctgraph/metrics.hpp"
#include "ctgraph/model.hpp"
#include "ctgraph/optim.hpp"
#include "ctgraph/report.hpp"
#include "ctgraph/spectral.hpp"
#include "ctgraph/synth.hpp"
#include "ctgraph/train.hpp"
