#include "stella/gradcheck.hpp"

#include <cmath>

namespace stella {

GradReport grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, real eps,
                      real tol) {
    if (eps <= 0) tensor_fail("grad_check: eps must be positive");
    Tensor leaf = Tensor::from(x.shape(), x.data(), true);
    Tensor y = f(leaf);
    if (!std::isfinite(y.item())) tensor_fail("grad_check: non-finite forward value");
    y.backward();
    std::vector<real> analytic = leaf.grad().empty()
                                     ? std::vector<real>(static_cast<size_t>(leaf.size()), 0.0)
                                     : leaf.grad();

    GradReport rep;
    for (int64_t i = 0; i < x.size(); ++i) {
        Tensor xp = Tensor::from(x.shape(), x.data());
        Tensor xm = Tensor::from(x.shape(), x.data());
        xp.data()[static_cast<size_t>(i)] += eps;
        xm.data()[static_cast<size_t>(i)] -= eps;
        real numeric = (f(xp).item() - f(xm).item()) / (2 * eps);
        real a = analytic[static_cast<size_t>(i)];
        real denom = std::max({std::abs(a), std::abs(numeric), static_cast<real>(1e-8)});
        real rel = std::abs(a - numeric) / denom;
        if (rel > rep.max_relative_error) {
            rep.max_relative_error = rel;
            rep.worst_index = i;
            rep.analytic = a;
            rep.numeric = numeric;
        }
    }
    rep.passed = rep.max_relative_error <= tol;
    return rep;
}

}  // namespace stella
