// model.hpp — diffusion model descriptions and simulated paths.
#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbfr/geometry.hpp"

namespace sbfr {

// Reference SDE  dX_s = a(s, X_s) ds + sigma(s, X_s) dW_s  on [0, T].
//
// The derivative fields are the contractions needed to build the reverse
// process; when absent they are filled by central finite differences. The
// closed-form transition density block is populated for oracle models only.
struct DiffusionModel {
    int dim = 1;        // d
    int noise_dim = 1;  // m
    double horizon = 1.0;

    std::function<Vec(double, const Vec&)> drift;       // a(t, x)
    std::function<Mat(double, const Vec&)> diffusion;   // sigma(t, x), d x m

    // Optional analytic derivatives of b := sigma sigma^T and of the drift.
    std::function<Vec(double, const Vec&)> b_row_div;   // i -> sum_j d/dx_j b^{ij}
    std::function<double(double, const Vec&)> b_lap;    // sum_{ij} d^2/dx_i dx_j b^{ij}
    std::function<double(double, const Vec&)> a_div;    // sum_i d/dx_i a^i

    // Closed-form transition density q(s, x; t, y), its log-gradient in x,
    // and box masses of q(0, .; T, .) — present for oracle models only.
    std::function<double(double, const Vec&, double, const Vec&)> trans_density;
    std::function<Vec(double, const Vec&, double, const Vec&)> grad_log_density_x;
    std::function<double(const Vec&, const Box&)> forward_box_mass;  // x -> integral over box in z
    std::function<double(const Vec&, const Box&)> reverse_box_mass;  // z -> integral over box in x

    bool has_density() const { return static_cast<bool>(trans_density); }

    void validate() const {
        if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("DiffusionModel: dim must be in [1," + std::to_string(kMaxDim) + "]");
        if (noise_dim < 1 || noise_dim > kMaxDim) throw std::invalid_argument("DiffusionModel: noise_dim must be in [1," + std::to_string(kMaxDim) + "]");
        if (!(horizon > 0.0)) throw std::invalid_argument("DiffusionModel: horizon must be positive");
        if (!drift || !diffusion) throw std::invalid_argument("DiffusionModel: drift and diffusion are required");
    }
};

// Reverse process coefficients (same horizon as the forward model):
//   dY_s = alpha(s, Y_s) ds + sigma_tilde(s, Y_s) dW~_s,
//   Y weight(s) = exp( integral_0^s c(u, Y_u) du ).
struct ReverseModel {
    int dim = 1;
    int noise_dim = 1;
    double horizon = 1.0;
    std::function<Vec(double, const Vec&)> alpha;
    std::function<Mat(double, const Vec&)> sigma_tilde;
    std::function<double(double, const Vec&)> potential;  // c(s, y)
};

// Simulated trajectory on a strictly increasing time grid starting at 0.
// Reverse paths additionally carry the multiplicative weight sequence, which
// starts at 1 and stays strictly positive.
struct Path {
    int dim = 1;
    std::vector<double> times;     // grid nodes, times.front() == 0
    std::vector<double> states;    // times.size() * dim, row-major
    std::vector<double> weights;   // empty for forward paths

    int steps() const { return static_cast<int>(times.size()) - 1; }
    Vec state(int k) const {
        Vec x(dim);
        for (int i = 0; i < dim; ++i) x[i] = states[static_cast<std::size_t>(k * dim + i)];
        return x;
    }
    Vec terminal() const { return state(steps()); }
    double weight(int k) const { return weights[static_cast<std::size_t>(k)]; }
    double terminal_weight() const { return weights.back(); }

    // Index of a grid node equal to t (within a relative tolerance).
    int index_of_time(double t) const;
};

class SimulationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class WeightOverflowError : public SimulationError {
  public:
    using SimulationError::SimulationError;
};

}  // namespace sbfr
