#include "sbfr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sbfr/parallel.hpp"
#include "sbfr/rng.hpp"
#include "sbfr/sde.hpp"

namespace sbfr {

void SolverConfig::validate() const {
    if (cloud_size < 10) throw std::invalid_argument("SolverConfig: cloud_size must be >= 10");
    if (sde_steps < 1) throw std::invalid_argument("SolverConfig: sde_steps must be >= 1");
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("SolverConfig: alpha must lie in (0, 1]");
    if (bandwidth && (!(*bandwidth > 0.0) || !(*bandwidth < 1.0)))
        throw std::invalid_argument("SolverConfig: bandwidth must lie in (0, 1)");
    if (max_iterations < 0) throw std::invalid_argument("SolverConfig: max_iterations must be >= 0 (0 = auto)");
    if (!(stop_tol > 0.0)) throw std::invalid_argument("SolverConfig: stop_tol must be positive");
    bounds.validate();
}

std::shared_ptr<const SampleClouds> build_clouds(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT,
                                                 const SolverConfig& config, std::uint64_t seed_salt) {
    const SamplerDensity phi0 = SamplerDensity::uniform(rho0.support.inflated(0.1));
    const SamplerDensity phiT = SamplerDensity::uniform(rhoT.support.inflated(0.1));
    const std::uint64_t seed = seed_salt == 0 ? config.master_seed : splitmix64(config.master_seed ^ seed_salt);

    PathCloud fwd = sample_cloud(model, phi0, config.cloud_size, config.sde_steps, CloudDirection::forward, seed);
    PathCloud rev = sample_cloud(model, phiT, config.cloud_size, config.sde_steps, CloudDirection::reverse, seed);

    std::function<double(const Vec&)> QT, Q0;
    if (model.forward_box_mass && model.reverse_box_mass) {
        const Box ST = rhoT.support, S0 = rho0.support;
        const DiffusionModel m = model;
        QT = [m, ST](const Vec& x) { return m.forward_box_mass(x, ST); };
        Q0 = [m, S0](const Vec& z) { return m.reverse_box_mass(z, S0); };
    }
    const double delta = config.bandwidth ? *config.bandwidth : default_bandwidth(config.cloud_size, model.dim, config.alpha);
    return std::make_shared<SampleClouds>(std::move(fwd), std::move(rev), delta, rho0, rhoT, phi0, phiT, config.bounds, QT, Q0);
}

LatticeFunction apply_C_hat(const SampleClouds& clouds, const LatticeFunction& f, OperatorMode mode, int s0_nodes) {
    if (!(f.min_value() > 0.0)) throw std::domain_error("apply_C_hat: f must be strictly positive");
    const double inv_f_min = 1.0 / f.max_value();
    const auto inv_f = [&f](std::uint32_t, const Vec& end) { return 1.0 / f.eval(end); };

    // Inner stage at the S_0 lattice nodes (supplies sup u for the fallback).
    const LatticeFunction shape0 = LatticeFunction::constant(clouds.support0(), s0_nodes, 1.0);
    std::vector<double> u_nodes(shape0.node_count());
    parallel_blocks(u_nodes.size(), [&](std::size_t k) {
        u_nodes[k] = clouds.forward_operator_eval(inv_f, inv_f_min, shape0.node_point(k), mode);
    });
    const double u_sup = *std::max_element(u_nodes.begin(), u_nodes.end());

    // Inner stage at every reverse endpoint inside S_0 (exact evaluation, no
    // second interpolation inside the composition).
    const PathCloud& rev = clouds.reverse_cloud();
    const Box& S0 = clouds.support0();
    std::vector<double> u_at_end(rev.size(), 0.0);
    const std::size_t blocks = (rev.size() + kReductionBlock - 1) / kReductionBlock;
    parallel_blocks(blocks, [&](std::size_t blk) {
        const std::size_t begin = blk * kReductionBlock;
        const std::size_t end_i = std::min(rev.size(), begin + kReductionBlock);
        for (std::size_t i = begin; i < end_i; ++i) {
            const Vec y = rev.end(i);
            if (S0.contains(y)) u_at_end[i] = clouds.forward_operator_eval(inv_f, inv_f_min, y, mode);
        }
    });

    // Outer stage on f's lattice.
    const auto inv_u = [&u_at_end](std::uint32_t i, const Vec&) { return 1.0 / u_at_end[i]; };
    const double inv_u_min = 1.0 / u_sup;
    std::vector<double> values(f.node_count());
    parallel_blocks(values.size(), [&](std::size_t k) {
        values[k] = clouds.reverse_operator_eval(inv_u, inv_u_min, f.node_point(k), mode);
    });
    return LatticeFunction(f.support(), f.nodes_per_axis(), std::move(values));
}

double estimate_contraction(const std::vector<double>& increments, const BoundsConfig& bounds) {
    if (increments.size() < 3) throw std::invalid_argument("estimate_contraction: needs at least 3 increments");
    std::vector<double> ratios;
    ratios.reserve(increments.size() - 1);
    for (std::size_t i = 0; i + 1 < increments.size(); ++i)
        ratios.push_back(increments[i] > 1e-15 ? increments[i + 1] / increments[i] : 0.0);
    std::sort(ratios.begin(), ratios.end());
    const std::size_t m = ratios.size();
    const double median = (m % 2 == 1) ? ratios[m / 2] : 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]);
    const double lo = 0.01;
    const double hi = std::max(lo, bounds.contraction_ceiling());
    return std::clamp(median, lo, hi);
}

int rate_iteration_cap(std::size_t n, int dim, double alpha, double kappa) {
    const double exponent = (1.0 + alpha) / (2.0 * (1.0 + alpha) + static_cast<double>(dim));
    const double k = exponent * std::log(static_cast<double>(n)) / std::log(1.0 / kappa);
    return std::min(200, std::max(1, static_cast<int>(std::ceil(k))));
}

namespace {

// Fraction of nodes moved by the clamp.
double clamp_fraction(const LatticeFunction& before, const LatticeFunction& after) {
    std::size_t moved = 0;
    for (std::size_t k = 0; k < before.node_count(); ++k)
        if (before.value_at(k) != after.value_at(k)) ++moved;
    return static_cast<double>(moved) / static_cast<double>(before.node_count());
}

bool straddles_one(const LatticeFunction& f, const LatticeFunction& g) {
    double max_ratio = 0.0, min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.node_count(); ++k) {
        const double r = f.value_at(k) / g.value_at(k);
        max_ratio = std::max(max_ratio, r);
        min_ratio = std::min(min_ratio, r);
    }
    return min_ratio <= 1.0 + 1e-12 && max_ratio >= 1.0 - 1e-12;
}

}  // namespace

SchrodingerSolution picard_solve(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT,
                                 const SolverConfig& config) {
    model.validate();
    config.validate();

    const int latT = config.lattice_nodes > 0 ? config.lattice_nodes : default_lattice_nodes(model.dim);
    const int lat0 = latT;
    const double gmin = config.bounds.gstar_min();
    const double gmax = config.bounds.gstar_max();

    std::shared_ptr<const SampleClouds> clouds = build_clouds(model, rho0, rhoT, config);

    // Uniform density on S_T: already L1-normalized by construction.
    LatticeFunction g = LatticeFunction::constant(rhoT.support, latT, 1.0 / rhoT.support.volume());

    IterationTrace trace;
    const int hard_cap = config.max_iterations > 0 ? config.max_iterations : 200;
    for (int iter = 1; iter <= hard_cap; ++iter) {
        if (config.resample_per_iteration && iter > 1)
            clouds = build_clouds(model, rho0, rhoT, config, 0x51a5u + static_cast<std::uint64_t>(iter));

        const LatticeFunction applied = apply_C_hat(*clouds, g, config.mode, lat0);
        auto [normalized, norm] = l1_normalize(applied);
        trace.l1_norms.push_back(norm);
        trace.ratio_straddles.push_back(straddles_one(normalized, g));

        const LatticeFunction clamped = truncate_clamp(normalized, gmin, gmax);
        const double cfrac = clamp_fraction(normalized, clamped);
        trace.clamp_fractions.push_back(cfrac);
        if (cfrac > 0.10) trace.clamp_saturated = true;

        const double increment = hilbert_distance(clamped, g);
        trace.increments.push_back(increment);
        g = clamped;
        trace.iterations = iter;

        if (increment < config.stop_tol) {
            trace.converged = true;
            break;
        }
        if (config.max_iterations == 0 && trace.increments.size() >= 3) {
            const double kappa = estimate_contraction(trace.increments, config.bounds);
            if (iter >= rate_iteration_cap(config.cloud_size, model.dim, config.alpha, kappa)) break;
        }
    }
    trace.kappa_hat = trace.increments.size() >= 3 ? estimate_contraction(trace.increments, config.bounds)
                                                   : config.bounds.contraction_ceiling();

    // Final normalization; values stay inside the clamp band whenever the
    // bounds are consistent (logged through clamp_fractions otherwise).
    g = l1_normalize(g).first;

    SchrodingerSolution sol;
    sol.config = config;
    sol.clouds = clouds;
    sol.trace = trace;
    sol.g_hat = g;
    auto [nu0, nuT] = potentials_from_g(*clouds, g, rho0, rhoT, config.mode, lat0);
    sol.nu_0 = std::move(nu0);
    sol.nu_T = std::move(nuT);
    return sol;
}

std::pair<LatticeFunction, LatticeFunction> potentials_from_g(const SampleClouds& clouds, const LatticeFunction& g_hat,
                                                              const Marginal& rho0, const Marginal& rhoT, OperatorMode mode,
                                                              int s0_nodes) {
    if (!(g_hat.min_value() > 0.0)) throw std::domain_error("potentials_from_g: g_hat must be strictly positive");

    LatticeFunction nuT = g_hat;
    for (std::size_t k = 0; k < nuT.node_count(); ++k) nuT.value_at(k) = rhoT.pdf(nuT.node_point(k)) / g_hat.value_at(k);

    const double inv_g_min = 1.0 / g_hat.max_value();
    const auto inv_g = [&g_hat](std::uint32_t, const Vec& end) { return 1.0 / g_hat.eval(end); };
    LatticeFunction nu0 = LatticeFunction::constant(rho0.support, s0_nodes, 1.0);
    std::vector<double> values(nu0.node_count());
    parallel_blocks(values.size(), [&](std::size_t k) {
        const Vec x = nu0.node_point(k);
        values[k] = rho0.pdf(x) / clouds.forward_operator_eval(inv_g, inv_g_min, x, mode);
    });
    for (std::size_t k = 0; k < nu0.node_count(); ++k) nu0.value_at(k) = values[k];
    return {std::move(nu0), std::move(nuT)};
}

ResidualReport marginal_residuals(const DiffusionModel& model, const SchrodingerSolution& solution, int n_mc,
                                  std::uint64_t seed) {
    if (n_mc < 1) throw std::invalid_argument("marginal_residuals: n_mc must be >= 1");
    const LatticeFunction& nu0 = solution.nu_0;
    const LatticeFunction& nuT = solution.nu_T;
    const Marginal& rho0 = solution.clouds->rho0();
    const Marginal& rhoT = solution.clouds->rhoT();
    const ReverseModel rev = derive_reverse_model(model);
    const int steps = solution.config.sde_steps;

    ResidualReport report;
    report.n_mc = n_mc;

    std::vector<double> r0(nu0.node_count());
    parallel_blocks(r0.size(), [&](std::size_t k) {
        const Vec x = nu0.node_point(k);
        RandomStream rng(seed, StreamDomain::residual_forward, k);
        double acc = 0.0;
        for (int j = 0; j < n_mc; ++j) acc += nuT.eval_or_zero(simulate_forward(model, x, steps, rng).terminal());
        const double lhs = nu0.value_at(k) * acc / n_mc;
        const double rho = rho0.pdf(x);
        r0[k] = std::abs(lhs - rho) / rho;
    });
    std::vector<double> rT(nuT.node_count());
    parallel_blocks(rT.size(), [&](std::size_t k) {
        const Vec z = nuT.node_point(k);
        RandomStream rng(seed, StreamDomain::residual_reverse, k);
        double acc = 0.0;
        for (int j = 0; j < n_mc; ++j) {
            const Path p = simulate_reverse(rev, z, steps, rng);
            acc += nu0.eval_or_zero(p.terminal()) * p.terminal_weight();
        }
        const double lhs = nuT.value_at(k) * acc / n_mc;
        const double rho = rhoT.pdf(z);
        rT[k] = std::abs(lhs - rho) / rho;
    });

    for (double v : r0) {
        report.sup0 = std::max(report.sup0, v);
        report.mean0 += v;
    }
    report.mean0 /= static_cast<double>(r0.size());
    for (double v : rT) {
        report.supT = std::max(report.supT, v);
        report.meanT += v;
    }
    report.meanT /= static_cast<double>(rT.size());
    return report;
}

}  // namespace sbfr
