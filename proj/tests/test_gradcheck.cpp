#include <doctest.h>

#include "scr/gradcheck.hpp"

using namespace scr;

TEST_CASE("gradcheck: both loss compositions match finite differences below 1e-5") {
    const GradCheckOutcome outcome = run_gradcheck(2024);
    CAPTURE(outcome.mse_path.max_rel_error);
    CAPTURE(outcome.scr_path.max_rel_error);
    CHECK(outcome.mse_path.max_rel_error < 1e-5);
    CHECK(outcome.scr_path.max_rel_error < 1e-5);
    CHECK(outcome.passed());
}

TEST_CASE("gradcheck: full SCR loss on an 8-sample, 12-feature batch stays below 1e-5") {
    // A second seed exercises a different corruption draw and pair mask.
    const GradCheckOutcome outcome = run_gradcheck(7);
    CHECK(outcome.scr_path.max_rel_error < 1e-5);
}

TEST_CASE("gradcheck: a deliberately perturbed analytic gradient fails (negative control)") {
    const GradCheckOutcome outcome = run_gradcheck(2024, /*analytic_perturbation=*/1e-2);
    CHECK_FALSE(outcome.passed());
}
