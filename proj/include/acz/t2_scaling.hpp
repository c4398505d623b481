#pragma once

#include <cmath>

#include "acz/error.hpp"

namespace acz {

/// Coherence time under N pi pulses: T2(N) = t2_ref * (N / n_ref)^s.
/// Defaults are the NV-ensemble values: T2 = 3.2 us under CP2, s = 0.41.
struct T2Scaling {
  double t2_ref = 3.2;
  double n_ref = 2.0;
  double s = 0.41;

  double at(double n_pi) const {
    if (!(n_pi > 0.0)) throw DomainError("pi-pulse count must be positive");
    return t2_ref * std::pow(n_pi / n_ref, s);
  }
};

}  // namespace acz
