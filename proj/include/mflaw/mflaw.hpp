#pragma once

#include "mflaw/bipartite_graph.hpp"
#include "mflaw/error.hpp"
#include "mflaw/info_metrics.hpp"
#include "mflaw/law_fitting.hpp"
#include "mflaw/probability_model.hpp"
#include "mflaw/random.hpp"
#include "mflaw/summation.hpp"
#include "mflaw/walk_engine.hpp"
