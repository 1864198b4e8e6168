#pragma once

#include <string>

#include "delayiqc/lpv.hpp"

namespace delayiqc {

/// Open-loop plant of the classical tracking loop: u -> y.
StateSpace classical_loop_open();

/// Linearized classical loop after the loop shift. Inputs (w, d), outputs
/// (v, e) with v = e = d - y.
LpvPlant classical_loop_lin();

/// Milling cutter at stiffness k on the vertices rho = -1, 1 (after the loop
/// shift). `grid` > 2 adds evenly spaced interior points.
LpvPlant milling(double k, int grid = 2);

/// Milling plant before the loop shift (feedback through the plain delay).
LpvPlant milling_unshifted(double k, int grid = 2);

/// Resolves "nl-classical-loop-lin", "milling(k)" or "milling(k=0.3)".
LpvPlant builtin_lpv(const std::string& name, int grid = 2);

}  // namespace delayiqc
