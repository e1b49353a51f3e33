// solver.hpp — composition of the estimated operators into the empirical
// fixed-point map, the truncated normalized Picard iteration, and the
// extraction of the boundary potentials with diagnostics.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sbfr/clouds.hpp"
#include "sbfr/lattice.hpp"
#include "sbfr/model.hpp"

namespace sbfr {

struct SolverConfig {
    std::size_t cloud_size = 10000;      // N
    int sde_steps = 64;
    double alpha = 1.0;                  // assumed Holder smoothness in (0, 1]
    std::optional<double> bandwidth;     // default: default_bandwidth(N, d, alpha)
    BoundsConfig bounds;
    int max_iterations = 0;              // 0: auto cap from the rate rule
    double stop_tol = 1e-4;
    std::uint64_t master_seed = 0;
    bool resample_per_iteration = false;
    int lattice_nodes = 0;               // 0: default per dimension
    OperatorMode mode = OperatorMode::self_normalized;
    int residual_mc = 0;                 // extra diagnostic paths per node in solve runs

    void validate() const;
};

struct IterationTrace {
    std::vector<double> increments;        // d_H(g_l, g_{l-1})
    std::vector<double> l1_norms;          // norm removed at each step
    std::vector<double> clamp_fractions;   // fraction of clamped nodes
    std::vector<bool> ratio_straddles;     // min/max ratio straddles 1 after normalize
    double kappa_hat = 0.0;                // estimated contraction factor
    bool converged = false;
    int iterations = 0;
    bool clamp_saturated = false;          // clamp touched more than 10% of nodes at some step
};

struct SchrodingerSolution {
    LatticeFunction g_hat;  // on the S_T lattice, L1-normalized and clamped
    LatticeFunction nu_T;   // rho_T / g_hat
    LatticeFunction nu_0;   // rho_0 / E_T^N[1 / g_hat] on the S_0 lattice
    IterationTrace trace;
    std::shared_ptr<const SampleClouds> clouds;
    SolverConfig config;
};

// Builds the paired clouds for an SBP instance: start points drawn uniformly
// from the 10%-inflated support boxes, endpoints by Euler-Maruyama, exact box
// masses wired in for closed-form models.
std::shared_ptr<const SampleClouds> build_clouds(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT,
                                                 const SolverConfig& config, std::uint64_t seed_salt = 0);

// One application of the empirical fixed-point operator: the inner stage
// u = E_T^N[1/f] is evaluated exactly at every reverse endpoint inside S_0
// and at the S_0 lattice nodes (whose maximum supplies the fallback level of
// the outer stage); the result is z -> E_0^N[1/u](z) on f's lattice.
LatticeFunction apply_C_hat(const SampleClouds& clouds, const LatticeFunction& f, OperatorMode mode, int s0_nodes);

// Median of successive increment ratios, clamped into
// [0.01, max(0.01, tanh^2(log(q_max/q_min)/2))]. Requires >= 3 increments.
double estimate_contraction(const std::vector<double>& increments, const BoundsConfig& bounds);

// Iteration cap from the rate rule: ceil( (1+alpha)/(2(1+alpha)+d) * log N / log(1/kappa) ).
int rate_iteration_cap(std::size_t n, int dim, double alpha, double kappa);

// Truncated normalized Picard iteration from the uniform density on S_T.
SchrodingerSolution picard_solve(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT, const SolverConfig& config);

// nu_T = rho_T/g nodewise; nu_0 = rho_0 / E_T^N[1/g] on the S_0 lattice.
std::pair<LatticeFunction, LatticeFunction> potentials_from_g(const SampleClouds& clouds, const LatticeFunction& g_hat,
                                                              const Marginal& rho0, const Marginal& rhoT, OperatorMode mode,
                                                              int s0_nodes);

struct ResidualReport {
    double sup0 = 0.0;
    double mean0 = 0.0;
    double supT = 0.0;
    double meanT = 0.0;
    int n_mc = 0;
};

// Relative residuals of the stochastic boundary system at the lattice nodes,
// via n_mc fresh forward/reverse paths per node.
ResidualReport marginal_residuals(const DiffusionModel& model, const SchrodingerSolution& solution, int n_mc,
                                  std::uint64_t seed);

}  // namespace sbfr
