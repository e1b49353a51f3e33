// bridge.hpp — forward-reverse estimators for conditional diffusions, the
// non-nested estimator of finite-dimensional distributions of the bridged
// process, and drift-corrected (h-transform) simulation for models with a
// closed-form transition density.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sbfr/kernel.hpp"
#include "sbfr/lattice.hpp"
#include "sbfr/model.hpp"
#include "sbfr/rng.hpp"

namespace sbfr {

// Two-sided time grid around the matching time t*:
//   forward times  0 = s_0 < s_1 < ... < s_K = t*,
//   reverse times  t* = t_0 < t_1 < ... < t_L = T,
// with reversed clocks t^_i = T - t_{L-i} for the reverse process.
struct TimePartition {
    std::vector<double> forward_times;
    std::vector<double> reverse_times;

    double t_star() const { return forward_times.back(); }
    double horizon() const { return reverse_times.back(); }
    std::vector<double> reversed_clocks() const;  // t^_1 .. t^_L (ascending)
    // Number of tuple slots: start, forward interiors, t*, reverse-side
    // interiors, end — in increasing forward-time order.
    std::size_t tuple_size() const { return forward_times.size() + reverse_times.size() - 1; }
    std::vector<double> tuple_times() const;

    static TimePartition simple(double horizon, double t_star);
    static TimePartition make(double horizon, double t_star, std::vector<double> forward_interior,
                              std::vector<double> reverse_interior);
    void validate() const;
};

// Functional of the state tuple (start, interior states, end) in increasing
// forward-time order; see TimePartition::tuple_times for the time of each slot.
using PathFunctional = std::function<double(std::span<const Vec>)>;

class InsufficientOverlapError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct FrEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double nonzero_fraction = 0.0;  // fraction of (n, m) pairs inside the mollifier support
};

// Appendix-C style bandwidth regimes: for d <= 4, N^{-max(1/4, min(1/d, 1/3))};
// for d > 4, N^{-2/(4+d)}.
double fr_bandwidth_rule(int dim, std::size_t n);

// Monte Carlo estimate of the joint functional
//   (1/(NM)) sum_{n,m} g(tuple) K_eps(Y_{T-t*}^{y,m} - X_{t*}^{x,n}) W_{T-t*}^{y,m},
// whose limit as eps -> 0 is E[g | X_T = y] q(0, x; T, y). The standard error
// comes from the forward-row / reverse-column variance decomposition.
FrEstimate fr_joint_estimate(const DiffusionModel& model, const PathFunctional& g, const Vec& x, const Vec& y,
                             const TimePartition& partition, std::size_t n_forward, std::size_t m_reverse, double epsilon,
                             std::uint64_t master_seed, int sde_steps = 64);

// Ratio estimator E[g | bridge x -> y] = joint(g) / joint(1) on shared paths.
// Throws InsufficientOverlapError when the denominator is nonpositive.
FrEstimate fr_conditional_estimate(const DiffusionModel& model, const PathFunctional& g, const Vec& x, const Vec& y,
                                   const TimePartition& partition, std::size_t n_paths, double epsilon,
                                   std::uint64_t master_seed, int sde_steps = 64);

// Normalized boundary sampler: either a point mass or a lattice density with
// a rejection envelope (envelope >= max node value).
class PotentialSampler {
  public:
    static PotentialSampler from_density(const LatticeFunction& density);
    static PotentialSampler point_mass(const Vec& atom);

    bool is_atom() const { return atom_.has_value(); }
    const Vec& atom() const { return *atom_; }
    const LatticeFunction& density() const { return *density_; }
    double envelope() const { return envelope_; }
    const Box& box() const;
    double density_at(const Vec& x) const;  // zero outside the box; atoms unsupported

    Vec draw(RandomStream& rng) const;
    // Rejection draw accumulating the attempt count across calls.
    Vec draw_tracked(RandomStream& rng, std::size_t& attempts) const;

  private:
    std::optional<Vec> atom_;
    std::optional<LatticeFunction> density_;
    double envelope_ = 0.0;
    Box box_;
};

// Exact-in-distribution rejection sampling from the boundary density.
std::vector<Vec> sample_from_potential(const PotentialSampler& p, std::size_t count, RandomStream& rng);

struct FddQuery {
    PathFunctional g;
    TimePartition partition;
    double epsilon = 0.0;          // 0: fr_bandwidth_rule(d, R)
    std::size_t replications = 1;  // R, outer pairs
    std::size_t cloud_size = 1000; // N, auxiliary batch for the normalizer
    int sde_steps = 64;

    void validate() const;
};

struct FddResult {
    double value = 0.0;
    double std_error = 0.0;      // delete-one jackknife over the outer index
    bool se_degenerate = false;  // R = 1: standard error 0 with this flag set
    double c0T = 0.0;            // estimated normalizer
    double nonzero_fraction = 0.0;
};

// Non-nested estimator of E[g(X^mu at the partition times)] for the bridged
// process with boundary samplers nu0, nuT: R forward and R reverse paths, an
// R x R mollified double sum, and the normalizer
//   c0T^{-1} = E[nuT(X_T^{0,U})]  (aux forward batch; mirrored through the
// reverse process when only nu0 has a density; two atoms use 1/q and require
// a closed-form model).
FddResult fdd_schrodinger_estimate(const DiffusionModel& model, const PotentialSampler& nu0, const PotentialSampler& nuT,
                                   const FddQuery& query, std::uint64_t master_seed);

// Euler-Maruyama for the drift-corrected dynamics
//   dX = (a + sigma sigma^T grad log h) dt + sigma dW,
//   h(w, t) = trapezoidal lattice quadrature of q(t, w; T, y) nu_T(y),
// simulated on [0, T - delta_cap]; the gradient uses the analytic gradient of
// log q under the integral. Requires a closed-form model and delta_cap > 0
// (the correction drift blows up at the terminal time).
std::vector<Path> h_transform_simulate(const DiffusionModel& model, const LatticeFunction& nuT, const PotentialSampler& rho0,
                                       int steps, std::size_t count, double delta_cap, std::uint64_t master_seed,
                                       const std::vector<double>& mandatory_times = {});

}  // namespace sbfr
