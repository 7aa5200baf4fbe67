#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdcn/gradcheck.hpp"
#include "hdcn/model.hpp"

namespace hdcn {

struct OpCheck {
  std::string op;
  ad::GradCheckResult result;
};

// Finite-difference checks of every differentiable op on small random
// inputs.
std::vector<OpCheck> check_ops(std::uint64_t seed);

// Finite-difference check of the full training loss (all slots, focus and
// gate terms) on a 2-turn, 2-slot synthetic dialogue with d = 4.
ad::GradCheckResult check_full_loss(std::uint64_t seed, CopyMode mode = CopyMode::hierarchical_cover,
                                    double focus_ratio = 0.1);

}  // namespace hdcn
