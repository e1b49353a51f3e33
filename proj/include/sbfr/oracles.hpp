// oracles.hpp — ground truth: the exact discrete fixed point of the
// boundary-potential system, closed-form reference models, and the
// degenerate (pinned-endpoint) closed forms.
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sbfr/clouds.hpp"
#include "sbfr/lattice.hpp"
#include "sbfr/model.hpp"

namespace sbfr {

// Discretized problem: node sets over S_0 and S_T with quadrature weights,
// kernel matrix q_ij = q(0, x_i; T, z_j) and marginal vectors normalized so
// that sum_i w_i rho_i = 1.
struct GridProblem {
    std::vector<double> rho0;    // n0
    std::vector<double> rhoT;    // nT
    std::vector<double> w0;      // n0 quadrature weights
    std::vector<double> wT;      // nT
    std::vector<double> kernel;  // n0 x nT, row-major, strictly positive

    // Lattice metadata, present when the problem was built over lattices.
    std::optional<Box> box0;
    std::optional<Box> boxT;
    std::vector<int> nodes0;
    std::vector<int> nodesT;

    std::size_t n0() const { return rho0.size(); }
    std::size_t nT() const { return rhoT.size(); }
    double q(std::size_t i, std::size_t j) const { return kernel[i * nT() + j]; }
    double q_min() const;
    double q_max() const;
    // tanh^2( log(q_max/q_min) / 2 ) for the realized kernel matrix.
    double contraction_ceiling() const;

    void validate() const;

    static GridProblem from_vectors(std::vector<double> rho0, std::vector<double> rhoT, std::vector<double> w0,
                                    std::vector<double> wT, std::vector<double> kernel);
    // Tabulates marginals and the closed-form density on trapezoid lattices.
    static GridProblem from_model(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT, int nodes_per_axis);
};

// One application of the exact discrete fixed-point operator
//   C[g](z_j) = sum_i w0_i rho0_i q_ij / ( sum_j' wT_j' q_ij' rhoT_j' / g_j' ).
std::vector<double> grid_apply_C(const GridProblem& p, const std::vector<double>& g);

struct GridSolution {
    std::vector<double> g_star;  // weight-normalized: sum_j wT_j g_j = 1
    std::vector<double> nu0;
    std::vector<double> nuT;
    std::vector<double> increments;  // Hilbert-distance trace
    int iterations = 0;
    double residual = 0.0;  // sup-norm residual of the discrete system
};

// Iterates the exact discrete operator with L1 normalization from g0 (uniform
// when absent) until the Hilbert increment falls below tol. Throws on
// max_iter exhaustion, reporting the last increment.
GridSolution grid_fixed_point(const GridProblem& p, double tol, int max_iter, const std::vector<double>* g0 = nullptr);

// Sup-norm residual of the discrete system for given potentials.
double grid_system_residual(const GridProblem& p, const std::vector<double>& nu0, const std::vector<double>& nuT);

// Rebuilds the lattice carrier of a node vector of a lattice-based problem.
LatticeFunction lattice_on_T(const GridProblem& p, const std::vector<double>& values);

enum class ModelKind { brownian, ou };

// Gaussian reference models with closed-form transition density, log-density
// gradient, and box-mass evaluators. brownian: dX = sigma dW. ou:
// dX = -theta X dt + sigma dW (theta = 0 reduces exactly to brownian).
DiffusionModel closed_form_model(ModelKind kind, int dim, double sigma, double theta = 0.0, double horizon = 1.0);

// Bounds q_min/q_max/Q_min/Q_max computed from the closed-form density by
// lattice optimization over S_0 x S_T, plus the marginal bounds.
BoundsConfig bounds_from_model(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT, int scan_nodes = 64);

enum class DegenerateCase { start_atom, end_atom, both_atoms };

// Closed-form potentials when one or both marginals are point masses. The
// atom side is (point, mass); the density side is a lattice function.
struct DegeneratePotentials {
    std::optional<Vec> nu0_atom;
    double nu0_mass = 0.0;
    std::optional<LatticeFunction> nu0_density;
    std::optional<Vec> nuT_atom;
    double nuT_mass = 0.0;
    std::optional<LatticeFunction> nuT_density;
};

DegeneratePotentials degenerate_potentials(DegenerateCase which, const Vec& x0, const Vec& z0, const Marginal& rho_other,
                                           const std::function<double(const Vec&, const Vec&)>& q01, int nodes_per_axis);

}  // namespace sbfr
