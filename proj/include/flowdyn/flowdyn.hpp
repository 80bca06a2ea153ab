#pragma once

#include "flowdyn/angles.hpp"
#include "flowdyn/binding.hpp"
#include "flowdyn/eval.hpp"
#include "flowdyn/fit.hpp"
#include "flowdyn/histogram.hpp"
#include "flowdyn/pipeline.hpp"
#include "flowdyn/reservoir.hpp"
#include "flowdyn/scene_graph.hpp"
#include "flowdyn/serialize.hpp"
#include "flowdyn/simulator.hpp"
#include "flowdyn/spatial_hash.hpp"
#include "flowdyn/svg_export.hpp"
#include "flowdyn/swgmm.hpp"
#include "flowdyn/types.hpp"
