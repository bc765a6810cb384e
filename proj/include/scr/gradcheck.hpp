#pragma once

#include <cstdint>

#include "scr/nn.hpp"

namespace scr {

// Self-check of the two loss compositions the trainers rely on, against
// central finite differences on small seeded instances:
//   mse_path: encoder -> regressor -> MSE           (fine-tune / baseline path)
//   scr_path: corruption -> encoder -> projector -> normalize -> supcon loss
// `analytic_perturbation` is a test hook: it is added to one component of the
// analytic gradient so a broken gradient demonstrably fails the check.
struct GradCheckOutcome {
    GradCheckResult mse_path;
    GradCheckResult scr_path;
    double threshold = 1e-5;
    bool passed() const {
        return mse_path.max_rel_error < threshold && scr_path.max_rel_error < threshold;
    }
};

GradCheckOutcome run_gradcheck(std::uint64_t seed, double analytic_perturbation = 0.0);

}  // namespace scr
