#pragma once

// Multi-level clustering hierarchical Dirichlet Process: nested-data
// container and generators, conjugate Normal base model, shared DP
// machinery, the three-level collapsed Gibbs sampler, DP and Nested-DP
// baselines, evaluation metrics, and the EEG feature pipeline.

#include "mlchdp/base_model.hpp"
#include "mlchdp/baselines.hpp"
#include "mlchdp/data.hpp"
#include "mlchdp/dp.hpp"
#include "mlchdp/evaluation.hpp"
#include "mlchdp/features.hpp"
#include "mlchdp/math_util.hpp"
#include "mlchdp/rng.hpp"
#include "mlchdp/sample_io.hpp"
#include "mlchdp/sampler.hpp"
#include "mlchdp/synthetic.hpp"

namespace mlchdp {
inline constexpr const char* kVersion = "0.1.0";
}
