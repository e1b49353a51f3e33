#include "sbfr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sbfr {

double GridProblem::q_min() const { return *std::min_element(kernel.begin(), kernel.end()); }
double GridProblem::q_max() const { return *std::max_element(kernel.begin(), kernel.end()); }

double GridProblem::contraction_ceiling() const {
    const double t = std::tanh(0.5 * std::log(q_max() / q_min()));
    return t * t;
}

namespace {

double weighted_sum(const std::vector<double>& w, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
    return s;
}

}  // namespace

void GridProblem::validate() const {
    if (rho0.empty() || rhoT.empty()) throw std::invalid_argument("GridProblem: empty marginals");
    if (w0.size() != n0() || wT.size() != nT()) throw std::invalid_argument("GridProblem: weight size mismatch");
    if (kernel.size() != n0() * nT()) throw std::invalid_argument("GridProblem: kernel size mismatch");
    for (double v : kernel)
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("GridProblem: kernel entries must be strictly positive");
    for (double v : rho0)
        if (!(v > 0.0)) throw std::invalid_argument("GridProblem: marginals must be strictly positive");
    for (double v : rhoT)
        if (!(v > 0.0)) throw std::invalid_argument("GridProblem: marginals must be strictly positive");
    for (double v : w0)
        if (!(v > 0.0)) throw std::invalid_argument("GridProblem: weights must be strictly positive");
    for (double v : wT)
        if (!(v > 0.0)) throw std::invalid_argument("GridProblem: weights must be strictly positive");
    if (std::abs(weighted_sum(w0, rho0) - 1.0) > 1e-8 || std::abs(weighted_sum(wT, rhoT) - 1.0) > 1e-8)
        throw std::invalid_argument("GridProblem: marginals must be quadrature-normalized");
}

GridProblem GridProblem::from_vectors(std::vector<double> rho0, std::vector<double> rhoT, std::vector<double> w0,
                                      std::vector<double> wT, std::vector<double> kernel) {
    GridProblem p;
    p.rho0 = std::move(rho0);
    p.rhoT = std::move(rhoT);
    p.w0 = std::move(w0);
    p.wT = std::move(wT);
    p.kernel = std::move(kernel);
    const double m0 = weighted_sum(p.w0, p.rho0);
    for (double& v : p.rho0) v /= m0;
    const double mT = weighted_sum(p.wT, p.rhoT);
    for (double& v : p.rhoT) v /= mT;
    p.validate();
    return p;
}

GridProblem GridProblem::from_model(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT, int nodes_per_axis) {
    if (!model.has_density()) throw std::invalid_argument("GridProblem::from_model: model must expose a closed-form density");
    const LatticeFunction l0 = l1_normalize(LatticeFunction::tabulate(rho0.support, nodes_per_axis, [&](const Vec& x) { return rho0.pdf(x); })).first;
    const LatticeFunction lT = l1_normalize(LatticeFunction::tabulate(rhoT.support, nodes_per_axis, [&](const Vec& z) { return rhoT.pdf(z); })).first;

    GridProblem p;
    p.box0 = l0.support();
    p.boxT = lT.support();
    p.nodes0 = l0.nodes_per_axis();
    p.nodesT = lT.nodes_per_axis();
    p.rho0.assign(l0.values().begin(), l0.values().end());
    p.rhoT.assign(lT.values().begin(), lT.values().end());
    p.w0.resize(p.n0());
    p.wT.resize(p.nT());
    for (std::size_t i = 0; i < p.n0(); ++i) p.w0[i] = l0.quadrature_weight(i);
    for (std::size_t j = 0; j < p.nT(); ++j) p.wT[j] = lT.quadrature_weight(j);
    p.kernel.resize(p.n0() * p.nT());
    for (std::size_t i = 0; i < p.n0(); ++i) {
        const Vec xi = l0.node_point(i);
        for (std::size_t j = 0; j < p.nT(); ++j) p.kernel[i * p.nT() + j] = model.trans_density(0.0, xi, model.horizon, lT.node_point(j));
    }
    p.validate();
    return p;
}

std::vector<double> grid_apply_C(const GridProblem& p, const std::vector<double>& g) {
    const std::size_t n0 = p.n0(), nT = p.nT();
    if (g.size() != nT) throw std::invalid_argument("grid_apply_C: g size mismatch");
    std::vector<double> denom(n0, 0.0);
    for (std::size_t i = 0; i < n0; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nT; ++j) s += p.wT[j] * p.q(i, j) * p.rhoT[j] / g[j];
        denom[i] = s;
    }
    std::vector<double> out(nT, 0.0);
    for (std::size_t j = 0; j < nT; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n0; ++i) s += p.w0[i] * p.rho0[i] * p.q(i, j) / denom[i];
        out[j] = s;
    }
    return out;
}

GridSolution grid_fixed_point(const GridProblem& p, double tol, int max_iter, const std::vector<double>* g0) {
    if (!(tol > 0.0)) throw std::invalid_argument("grid_fixed_point: tol must be positive");
    p.validate();
    const std::size_t nT = p.nT();

    std::vector<double> g(nT, 1.0);
    if (g0) {
        if (g0->size() != nT) throw std::invalid_argument("grid_fixed_point: g0 size mismatch");
        g = *g0;
        for (double v : g)
            if (!(v > 0.0)) throw std::invalid_argument("grid_fixed_point: g0 must be strictly positive");
    }
    {
        const double norm = weighted_sum(p.wT, g);
        for (double& v : g) v /= norm;
    }

    GridSolution sol;
    bool converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> next = grid_apply_C(p, g);
        const double norm = weighted_sum(p.wT, next);
        for (double& v : next) v /= norm;
        const double inc = hilbert_distance(std::span<const double>(next), std::span<const double>(g));
        sol.increments.push_back(inc);
        g.swap(next);
        sol.iterations = it;
        if (inc < tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw std::runtime_error("grid_fixed_point: max_iter exceeded, last increment " + std::to_string(sol.increments.back()));

    sol.g_star = g;
    sol.nuT.resize(nT);
    for (std::size_t j = 0; j < nT; ++j) sol.nuT[j] = p.rhoT[j] / g[j];
    sol.nu0.resize(p.n0());
    for (std::size_t i = 0; i < p.n0(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nT; ++j) s += p.wT[j] * p.q(i, j) * sol.nuT[j];
        sol.nu0[i] = p.rho0[i] / s;
    }
    sol.residual = grid_system_residual(p, sol.nu0, sol.nuT);
    return sol;
}

double grid_system_residual(const GridProblem& p, const std::vector<double>& nu0, const std::vector<double>& nuT) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.n0(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.nT(); ++j) s += p.wT[j] * p.q(i, j) * nuT[j];
        worst = std::max(worst, std::abs(nu0[i] * s - p.rho0[i]));
    }
    for (std::size_t j = 0; j < p.nT(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p.n0(); ++i) s += p.w0[i] * p.q(i, j) * nu0[i];
        worst = std::max(worst, std::abs(nuT[j] * s - p.rhoT[j]));
    }
    return worst;
}

LatticeFunction lattice_on_T(const GridProblem& p, const std::vector<double>& values) {
    if (!p.boxT) throw std::invalid_argument("lattice_on_T: problem carries no lattice metadata");
    return LatticeFunction(*p.boxT, p.nodesT, values);
}

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// (1 - exp(-z)) / z, stable near z = 0.
double occ(double z) {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return -std::expm1(-z) / z;
}

}  // namespace

DiffusionModel closed_form_model(ModelKind kind, int dim, double sigma, double theta, double horizon) {
    if (!(sigma > 0.0)) throw std::invalid_argument("closed_form_model: sigma must be positive");
    if (kind == ModelKind::brownian) theta = 0.0;

    DiffusionModel m;
    m.dim = dim;
    m.noise_dim = dim;
    m.horizon = horizon;
    m.drift = [theta, dim](double, const Vec& x) {
        Vec a(dim);
        for (int i = 0; i < dim; ++i) a[i] = -theta * x[i];
        return a;
    };
    m.diffusion = [sigma, dim](double, const Vec&) { return Mat::identity(dim, sigma); };
    m.b_row_div = [dim](double, const Vec&) { return Vec(dim, 0.0); };
    m.b_lap = [](double, const Vec&) { return 0.0; };
    m.a_div = [theta, dim](double, const Vec&) { return -theta * static_cast<double>(dim); };

    // Per-axis transition: mean x_i e^{-theta dt}, variance sigma^2 dt occ(2 theta dt).
    auto decay = [theta](double dt) { return std::exp(-theta * dt); };
    auto variance = [sigma, theta](double dt) { return sigma * sigma * dt * occ(2.0 * theta * dt); };

    m.trans_density = [decay, variance, dim](double s, const Vec& x, double t, const Vec& y) {
        const double dt = t - s;
        const double v = variance(dt);
        const double e = decay(dt);
        const double inv_sd = 1.0 / std::sqrt(v);
        double dens = 1.0;
        for (int i = 0; i < dim; ++i) {
            const double z = (y[i] - x[i] * e) * inv_sd;
            dens *= kInvSqrt2Pi * inv_sd * std::exp(-0.5 * z * z);
        }
        return dens;
    };
    m.grad_log_density_x = [decay, variance, dim](double s, const Vec& x, double t, const Vec& y) {
        const double dt = t - s;
        const double v = variance(dt);
        const double e = decay(dt);
        Vec grad(dim);
        for (int i = 0; i < dim; ++i) grad[i] = (y[i] - x[i] * e) * e / v;
        return grad;
    };
    const double T = horizon;
    m.forward_box_mass = [decay, variance, T](const Vec& x, const Box& box) {
        const double sd = std::sqrt(variance(T));
        const double e = decay(T);
        double mass = 1.0;
        for (int i = 0; i < box.dim(); ++i) {
            const double mean = x[i] * e;
            mass *= normal_cdf((box.hi[i] - mean) / sd) - normal_cdf((box.lo[i] - mean) / sd);
        }
        return mass;
    };
    m.reverse_box_mass = [decay, variance, T](const Vec& z, const Box& box) {
        // As a function of x, q(0,x;T,z) is a Gaussian bump at z/e with sd
        // sd/e and total x-integral 1/e per axis (substitute u = x e).
        const double sd = std::sqrt(variance(T));
        const double e = decay(T);
        double mass = 1.0;
        for (int i = 0; i < box.dim(); ++i) {
            const double mean = z[i] / e;
            const double s = sd / e;
            mass *= (normal_cdf((box.hi[i] - mean) / s) - normal_cdf((box.lo[i] - mean) / s)) / e;
        }
        return mass;
    };
    return m;
}

BoundsConfig bounds_from_model(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT, int scan_nodes) {
    if (!model.has_density()) throw std::invalid_argument("bounds_from_model: model must expose a closed-form density");
    BoundsConfig b;
    b.q_min = std::numeric_limits<double>::infinity();
    b.q_max = 0.0;
    b.Q_min = std::numeric_limits<double>::infinity();
    b.Q_max = 0.0;
    const LatticeFunction grid0 = LatticeFunction::constant(rho0.support, scan_nodes, 1.0);
    const LatticeFunction gridT = LatticeFunction::constant(rhoT.support, scan_nodes, 1.0);
    for (std::size_t i = 0; i < grid0.node_count(); ++i) {
        const Vec x = grid0.node_point(i);
        for (std::size_t j = 0; j < gridT.node_count(); ++j) {
            const double q = model.trans_density(0.0, x, model.horizon, gridT.node_point(j));
            b.q_min = std::min(b.q_min, q);
            b.q_max = std::max(b.q_max, q);
        }
        const double QT = model.forward_box_mass(x, rhoT.support);
        b.Q_min = std::min(b.Q_min, QT);
        b.Q_max = std::max(b.Q_max, QT);
    }
    for (std::size_t j = 0; j < gridT.node_count(); ++j) {
        const double Q0 = model.reverse_box_mass(gridT.node_point(j), rho0.support);
        b.Q_min = std::min(b.Q_min, Q0);
        b.Q_max = std::max(b.Q_max, Q0);
    }
    b.rho_min = std::min(rho0.min_value, rhoT.min_value);
    b.rho_max = std::max(rho0.max_value, rhoT.max_value);
    b.validate();
    return b;
}

DegeneratePotentials degenerate_potentials(DegenerateCase which, const Vec& x0, const Vec& z0, const Marginal& rho_other,
                                           const std::function<double(const Vec&, const Vec&)>& q01, int nodes_per_axis) {
    if (!q01) throw std::invalid_argument("degenerate_potentials: q evaluator required");
    DegeneratePotentials out;
    switch (which) {
        case DegenerateCase::start_atom:
            out.nu0_atom = x0;
            out.nu0_mass = 1.0;
            out.nuT_density = LatticeFunction::tabulate(rho_other.support, nodes_per_axis,
                                                        [&](const Vec& z) { return rho_other.pdf(z) / q01(x0, z); });
            break;
        case DegenerateCase::end_atom:
            out.nuT_atom = z0;
            out.nuT_mass = 1.0;
            out.nu0_density = LatticeFunction::tabulate(rho_other.support, nodes_per_axis,
                                                        [&](const Vec& x) { return rho_other.pdf(x) / q01(x, z0); });
            break;
        case DegenerateCase::both_atoms:
            out.nu0_atom = x0;
            out.nu0_mass = 1.0 / q01(x0, z0);
            out.nuT_atom = z0;
            out.nuT_mass = 1.0;
            break;
    }
    return out;
}

}  // namespace sbfr
