#pragma once

#include "fairgraph/contribution.hpp"
#include "fairgraph/error.hpp"
#include "fairgraph/experiment.hpp"
#include "fairgraph/federation.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/io.hpp"
#include "fairgraph/metrics.hpp"
#include "fairgraph/model.hpp"
#include "fairgraph/motif.hpp"
#include "fairgraph/partition.hpp"
#include "fairgraph/synthetic.hpp"
#include "fairgraph/valuation.hpp"
