#include "sbfr/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sbfr {

namespace {

// Simpson quadrature of the one-dimensional factor and its first moment.
void factor_moments(double& mass, double& first_moment) {
    const int n = 2000;  // even
    const double a = -Kernel::support_radius, b = Kernel::support_radius;
    const double h = (b - a) / n;
    auto f = [](double u) { return 1.5 * (1.0 - 4.0 * u * u); };
    double m0 = f(a) + f(b);
    double m1 = a * f(a) + b * f(b);
    for (int i = 1; i < n; ++i) {
        const double u = a + h * i;
        const double w = (i % 2 == 1) ? 4.0 : 2.0;
        m0 += w * f(u);
        m1 += w * u * f(u);
    }
    mass = m0 * h / 3.0;
    first_moment = m1 * h / 3.0;
}

}  // namespace

Kernel::Kernel(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Kernel: dim must be in [1," + std::to_string(kMaxDim) + "]");
    double mass = 0.0, moment = 0.0;
    factor_moments(mass, moment);
    const double total_mass = std::pow(mass, dim);
    const double axis_moment = std::abs(moment) * std::pow(mass, dim - 1);
    if (std::abs(total_mass - 1.0) > 1e-6 || axis_moment > 1e-6)
        throw std::logic_error("Kernel: moment verification failed");
}

double Kernel::scaled(const Vec& u, double scale) const {
    if (!(scale > 0.0)) throw std::invalid_argument("Kernel::scaled: scale must be positive");
    Vec v = u;
    for (int i = 0; i < dim_; ++i) v[i] /= scale;
    return (*this)(v) / std::pow(scale, dim_);
}

double Kernel::sup_norm() const { return std::pow(1.5, dim_); }

double kernel_eval(const Kernel& kernel, const Vec& u, double scale) { return kernel.scaled(u, scale); }

}  // namespace sbfr
