#pragma once

// Umbrella header: the whole block-orientation toolkit.

#include "orient/block_graph.hpp"
#include "orient/dipole.hpp"
#include "orient/error.hpp"
#include "orient/io.hpp"
#include "orient/kdtree.hpp"
#include "orient/knn_graph.hpp"
#include "orient/mesh.hpp"
#include "orient/metrics.hpp"
#include "orient/normals.hpp"
#include "orient/parallel.hpp"
#include "orient/pipeline.hpp"
#include "orient/point_cloud.hpp"
#include "orient/process.hpp"
#include "orient/raster.hpp"
#include "orient/refine.hpp"
#include "orient/rng.hpp"
#include "orient/segmentation.hpp"
#include "orient/synth.hpp"
#include "orient/vcr.hpp"
#include "orient/vec3.hpp"
