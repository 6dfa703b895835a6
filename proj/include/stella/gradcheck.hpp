#pragma once

#include <functional>

#include "stella/tensor.hpp"

namespace stella {

struct GradReport {
    real max_relative_error = 0.0;
    int64_t worst_index = -1;
    real analytic = 0.0;
    real numeric = 0.0;
    bool passed = false;
};

// Central-difference check of the reverse-mode gradient of a scalar-valued f
// at x. Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
GradReport grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                      real eps = 1e-5, real tol = 1e-4);

}  // namespace stella
