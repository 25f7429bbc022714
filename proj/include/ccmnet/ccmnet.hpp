#pragma once

// Umbrella header.
#include "ccm.hpp"
#include "config.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "graph_io.hpp"
#include "influence.hpp"
#include "panel.hpp"
#include "pipeline.hpp"
#include "random.hpp"
#include "spectral.hpp"
#include "stats.hpp"
#include "svg.hpp"
#include "synthgen.hpp"
#include "version.hpp"
