#pragma once

// Umbrella header for the full pipeline:
// dataset ingestion -> windowing -> features -> scaler/PCA -> MLP -> evaluation.

#include "harbench/dataset.hpp"
#include "harbench/error.hpp"
#include "harbench/evaluation.hpp"
#include "harbench/features.hpp"
#include "harbench/linalg.hpp"
#include "harbench/matrix.hpp"
#include "harbench/model.hpp"
#include "harbench/pipeline.hpp"
#include "harbench/preprocess.hpp"
#include "harbench/rng.hpp"
#include "harbench/synthetic.hpp"
#include "harbench/text.hpp"
#include "harbench/windowing.hpp"
