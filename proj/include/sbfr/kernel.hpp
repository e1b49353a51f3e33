// kernel.hpp — the regression/mollifier kernel: a product of Epanechnikov
// factors rescaled to [-1/2, 1/2], so the support radius is exactly 1/2 in
// max-norm. Unit mass and vanishing first moments are verified by quadrature
// at construction (tolerance 1e-6).
#pragma once

#include "sbfr/geometry.hpp"

namespace sbfr {

class Kernel {
  public:
    explicit Kernel(int dim);

    int dim() const { return dim_; }
    static constexpr double support_radius = 0.5;  // max-norm

    // K(u) = prod_i (3/2)(1 - 4 u_i^2) on [-1/2,1/2]^d, zero outside.
    double operator()(const Vec& u) const {
        double k = 1.0;
        for (int i = 0; i < dim_; ++i) {
            const double ui = u[i];
            if (ui < -support_radius || ui > support_radius) return 0.0;
            k *= 1.5 * (1.0 - 4.0 * ui * ui);
        }
        return k;
    }

    // scale^{-d} K(u / scale); zero outside the scaled support.
    double scaled(const Vec& u, double scale) const;

    double sup_norm() const;  // (3/2)^d

  private:
    int dim_;
};

// Free-function form of the scaled evaluation.
double kernel_eval(const Kernel& kernel, const Vec& u, double scale);

}  // namespace sbfr
