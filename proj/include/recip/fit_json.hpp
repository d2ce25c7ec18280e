#pragma once

#include <string>

#include "recip/br_model.hpp"
#include "recip/p15_model.hpp"

namespace recip {

// Stable JSON documents for fit results. Doubles serialize in shortest
// round-trip form, so re-reading a document reproduces every number exactly.
std::string br_fit_json(const BrFit& fit, double level);
std::string p15_fit_json(const FitResult& fit);

// Group tag for a coordinate name: gamma1:* -> "X", gamma2:* -> "Y",
// delta:* -> "V", otherwise "".
std::string coordinate_group(const std::string& name);

}  // namespace recip
