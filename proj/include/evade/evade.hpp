#pragma once

// Umbrella header for the evade library: kernel-SVM training, decision
// gradients, evasion attacks, and vulnerability analysis.

#include "evade/analysis.hpp"
#include "evade/attack.hpp"
#include "evade/dataset.hpp"
#include "evade/errors.hpp"
#include "evade/kernel.hpp"
#include "evade/matrix.hpp"
#include "evade/model_io.hpp"
#include "evade/parallel.hpp"
#include "evade/report.hpp"
#include "evade/rng.hpp"
#include "evade/svm.hpp"
#include "evade/synth.hpp"
#include "evade/textio.hpp"
#include "evade/trace_io.hpp"
#include "evade/version.hpp"
