#pragma once

// Umbrella header for the capse triple-scoring toolkit.

#include "capse/adam.hpp"
#include "capse/capsule.hpp"
#include "capse/checkpoint.hpp"
#include "capse/config.hpp"
#include "capse/dataset.hpp"
#include "capse/embedding.hpp"
#include "capse/error.hpp"
#include "capse/evaluate.hpp"
#include "capse/rerank.hpp"
#include "capse/rng.hpp"
#include "capse/study.hpp"
#include "capse/trainer.hpp"
#include "capse/transe.hpp"
#include "capse/triple.hpp"
