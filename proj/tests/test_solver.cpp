#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbfr/oracles.hpp"
#include "sbfr/solver.hpp"

using namespace sbfr;

namespace {

Marginal affine_marginal(const Box& box, double at_lo, double at_hi) {
    // Density affine along axis 0, constant otherwise; exactly normalized on
    // the unit box when (at_lo + at_hi)/2 = 1.
    Marginal m;
    m.support = box;
    m.pdf = [box, at_lo, at_hi](const Vec& x) {
        const double u = (x[0] - box.lo[0]) / box.width(0);
        return at_lo + (at_hi - at_lo) * u;
    };
    m.min_value = std::min(at_lo, at_hi);
    m.max_value = std::max(at_lo, at_hi);
    return m;
}

struct SolveFixture {
    DiffusionModel model = closed_form_model(ModelKind::brownian, 1, 1.0);
    Marginal rho0 = affine_marginal(Box::unit(1), 1.2, 0.8);
    Marginal rhoT = affine_marginal(Box::unit(1), 0.8, 1.2);

    SolverConfig config(std::size_t n, std::uint64_t seed) const {
        SolverConfig c;
        c.cloud_size = n;
        c.sde_steps = 32;
        c.alpha = 1.0;
        c.bounds = bounds_from_model(model, rho0, rhoT);
        c.master_seed = seed;
        c.max_iterations = 12;
        c.stop_tol = 1e-3;
        c.lattice_nodes = 64;
        return c;
    }
};

}  // namespace

TEST_CASE("apply_C_hat: degree-1 homogeneity, hence scale-free after normalization") {
    SolveFixture fx;
    const SolverConfig cfg = fx.config(2000, 7);
    auto clouds = build_clouds(fx.model, fx.rho0, fx.rhoT, cfg);
    const LatticeFunction f = LatticeFunction::tabulate(fx.rhoT.support, 32, [](const Vec& z) { return 1.0 + 0.3 * z[0]; });
    const double c = 4.2;

    for (OperatorMode mode : {OperatorMode::self_normalized, OperatorMode::direct}) {
        const LatticeFunction Cf = apply_C_hat(*clouds, f, mode, 32);
        const LatticeFunction Ccf = apply_C_hat(*clouds, f.map([c](double v) { return c * v; }), mode, 32);
        for (std::size_t k = 0; k < Cf.node_count(); ++k)
            CHECK(Ccf.value_at(k) == doctest::Approx(c * Cf.value_at(k)).epsilon(1e-12));
        CHECK(hilbert_distance(l1_normalize(Ccf).first, l1_normalize(Cf).first) < 1e-12);

        // Positivity with the documented floor.
        const double u_floor = 1.0 / f.max_value();
        for (std::size_t k = 0; k < Cf.node_count(); ++k) {
            CHECK(Cf.value_at(k) > 0.0);
            (void)u_floor;
        }
    }
}

TEST_CASE("apply_C_hat approaches the exact grid operator as N grows") {
    SolveFixture fx;
    const GridProblem grid = GridProblem::from_model(fx.model, fx.rho0, fx.rhoT, 64);
    const LatticeFunction f = LatticeFunction::tabulate(fx.rhoT.support, 64, [](const Vec& z) { return 1.0 + 0.4 * std::sin(2.0 * z[0]); });
    std::vector<double> f_nodes(f.values().begin(), f.values().end());
    const std::vector<double> exact = grid_apply_C(grid, f_nodes);

    double prev = 1e300;
    for (std::size_t n : {4000u, 16000u, 64000u}) {
        SolverConfig cfg = fx.config(n, 11);
        auto clouds = build_clouds(fx.model, fx.rho0, fx.rhoT, cfg);
        const LatticeFunction est = apply_C_hat(*clouds, f, OperatorMode::self_normalized, 64);
        double sup = 0.0;
        for (std::size_t k = 0; k < est.node_count(); ++k) sup = std::max(sup, std::abs(est.value_at(k) - exact[k]));
        CHECK(sup < prev);
        prev = sup;
    }
    CHECK(prev < 0.05);
}

TEST_CASE("estimate_contraction: geometric traces, clamping, flat kernels") {
    BoundsConfig b;
    b.q_min = 0.1;  // ceiling tanh^2(log(12)/2) ~ 0.72, above the trace ratio
    b.q_max = 1.2;
    b.Q_min = b.Q_max = 1.0;
    b.rho_min = b.rho_max = 1.0;

    CHECK(estimate_contraction({1.0, 0.5, 0.25, 0.125}, b) == doctest::Approx(0.5).epsilon(1e-12));
    // Noisy trace clamps at the tanh^2 ceiling.
    BoundsConfig tight = b;
    tight.q_min = 0.3;  // ceiling ~ 0.36
    CHECK(estimate_contraction({1.0, 0.9, 0.85}, tight) == doctest::Approx(tight.contraction_ceiling()).epsilon(1e-12));
    // Vanishing increments clamp to the floor; a constant-kernel problem has
    // ceiling 0, so the floor wins.
    BoundsConfig flat = b;
    flat.q_min = flat.q_max = 1.0;
    CHECK(estimate_contraction({0.7, 0.0, 0.0}, flat) == doctest::Approx(0.01));
    CHECK_THROWS_AS(estimate_contraction({0.5, 0.25}, b), std::invalid_argument);
}

TEST_CASE("picard_solve: consistency fixture where g* is proportional to rho_T") {
    // rho_T built as the normalized image z -> int q(0,x;T,z) rho_0(x)/Q_T(x) dx
    // makes nu_T constant, i.e. g* proportional to rho_T.
    SolveFixture fx;
    const DiffusionModel model = fx.model;
    const Marginal rho0 = fx.rho0;
    const Box ST = Box::unit(1);

    const int quad_nodes = 2001;
    auto image_density = [&](double z) {
        const double h = 1.0 / (quad_nodes - 1);
        double s = 0.0;
        for (int k = 0; k < quad_nodes; ++k) {
            const double x = k * h;
            const double w = (k == 0 || k == quad_nodes - 1) ? 0.5 : 1.0;
            s += w * model.trans_density(0.0, {x}, 1.0, {z}) * rho0.pdf({x}) / model.forward_box_mass({x}, ST);
        }
        return s * h;
    };
    Marginal rhoT;
    rhoT.support = ST;
    // Tabulate once on a fine lattice and normalize.
    const LatticeFunction img = l1_normalize(LatticeFunction::tabulate(ST, 257, [&](const Vec& z) { return image_density(z[0]); })).first;
    rhoT.pdf = [img](const Vec& z) { return img.eval(z); };
    rhoT.min_value = img.min_value();
    rhoT.max_value = img.max_value();

    SolverConfig cfg;
    cfg.cloud_size = 20000;
    cfg.sde_steps = 32;
    cfg.bounds = bounds_from_model(model, rho0, rhoT);
    cfg.master_seed = 4242;
    cfg.max_iterations = 10;
    cfg.stop_tol = 1e-3;
    cfg.lattice_nodes = 64;

    const SchrodingerSolution sol = picard_solve(model, rho0, rhoT, cfg);
    const LatticeFunction target = l1_normalize(LatticeFunction::tabulate(ST, 64, [&](const Vec& z) { return rhoT.pdf(z); })).first;
    const double d = hilbert_distance(sol.g_hat, target);
    CHECK(d < 0.15);

    // nu_T should be near-constant: Hilbert distance to a constant is the log
    // oscillation of nu_T.
    const double osc = std::log(sol.nu_T.max_value() / sol.nu_T.min_value());
    CHECK(osc < 0.15);
}

TEST_CASE("picard_solve: error to the grid oracle shrinks with N") {
    SolveFixture fx;
    const GridProblem grid = GridProblem::from_model(fx.model, fx.rho0, fx.rhoT, 64);
    const GridSolution oracle = grid_fixed_point(grid, 1e-12, 500);
    const LatticeFunction g_star = lattice_on_T(grid, oracle.g_star);

    std::vector<double> errs;
    for (std::size_t n : {1000u, 4000u, 16000u}) {
        double acc = 0.0;
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const SchrodingerSolution sol = picard_solve(fx.model, fx.rho0, fx.rhoT, fx.config(n, seed));
            acc += hilbert_distance(sol.g_hat, g_star);
        }
        errs.push_back(acc / 3.0);
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[2] < 0.1);
}

TEST_CASE("picard_solve: solution invariants and diagnostics") {
    SolveFixture fx;
    const SchrodingerSolution sol = picard_solve(fx.model, fx.rho0, fx.rhoT, fx.config(4000, 9));

    CHECK(std::abs(l1_normalize(sol.g_hat).second - 1.0) < 1e-10);
    const double gmin = sol.config.bounds.gstar_min();
    const double gmax = sol.config.bounds.gstar_max();
    for (std::size_t k = 0; k < sol.g_hat.node_count(); ++k) {
        CHECK(sol.g_hat.value_at(k) >= gmin * (1.0 - 1e-9));
        CHECK(sol.g_hat.value_at(k) <= gmax * (1.0 + 1e-9));
    }
    CHECK(sol.nu_T.min_value() > 0.0);
    CHECK(sol.nu_0.min_value() > 0.0);
    // nu_T bounds from the marginal and clamp bands.
    CHECK(sol.nu_T.min_value() >= fx.rhoT.min_value / gmax * (1.0 - 1e-9));
    CHECK(sol.nu_T.max_value() <= fx.rhoT.max_value / gmin * (1.0 + 1e-9));
    for (bool ok : sol.trace.ratio_straddles) CHECK(ok);
    CHECK(sol.trace.kappa_hat > 0.0);
    CHECK(sol.trace.kappa_hat < 1.0);

    // Scaling rho_T's stored values only rescales nu_T (self-normalized mode).
    Marginal scaled = fx.rhoT;
    auto base_pdf = fx.rhoT.pdf;
    scaled.pdf = [base_pdf](const Vec& z) { return 3.0 * base_pdf(z); };
    scaled.min_value *= 3.0;
    scaled.max_value *= 3.0;
    SolverConfig cfg2 = fx.config(4000, 9);
    cfg2.bounds.rho_max *= 3.0;  // keep declared bounds valid
    const SchrodingerSolution sol2 = picard_solve(fx.model, fx.rho0, scaled, cfg2);
    CHECK(hilbert_distance(sol2.nu_T, sol.nu_T) < 1e-9);
}

TEST_CASE("marginal residuals: below 5% at N = 1e5, scale-invariant, n_mc > 0") {
    SolveFixture fx;
    const SchrodingerSolution big = picard_solve(fx.model, fx.rho0, fx.rhoT, fx.config(100000, 7));
    const ResidualReport rep = marginal_residuals(fx.model, big, 1000, 99);
    CHECK(rep.mean0 < 0.05);
    CHECK(rep.meanT < 0.05);
    CHECK(rep.sup0 < 0.25);
    CHECK(rep.supT < 0.25);
    CHECK_THROWS_AS(marginal_residuals(fx.model, big, 0, 77), std::invalid_argument);

    // Scaling nu_0 by c and nu_T by 1/c leaves residuals unchanged.
    const SchrodingerSolution sol = picard_solve(fx.model, fx.rho0, fx.rhoT, fx.config(20000, 3));
    const ResidualReport base = marginal_residuals(fx.model, sol, 400, 77);
    SchrodingerSolution scaled = sol;
    scaled.nu_0 = sol.nu_0.map([](double v) { return 2.0 * v; });
    scaled.nu_T = sol.nu_T.map([](double v) { return 0.5 * v; });
    const ResidualReport rep2 = marginal_residuals(fx.model, scaled, 400, 77);
    CHECK(rep2.sup0 == doctest::Approx(base.sup0).epsilon(1e-9));
    CHECK(rep2.supT == doctest::Approx(base.supT).epsilon(1e-9));
}

TEST_CASE("distance to the grid oracle is nonincreasing along the iteration") {
    // Recursion structure: d_H(g_l, g*) <= kappa d_H(g_{l-1}, g*) + one-step
    // noise, so the oracle distance decays until the statistical floor and
    // then stays at that level.
    SolveFixture fx;
    const GridProblem grid = GridProblem::from_model(fx.model, fx.rho0, fx.rhoT, 64);
    const GridSolution oracle = grid_fixed_point(grid, 1e-12, 500);
    const LatticeFunction g_star = lattice_on_T(grid, oracle.g_star);

    SolverConfig cfg = fx.config(8000, 5);
    auto clouds = build_clouds(fx.model, fx.rho0, fx.rhoT, cfg);
    LatticeFunction g = LatticeFunction::constant(fx.rhoT.support, 64, 1.0);
    g = l1_normalize(g).first;
    std::vector<double> dist{hilbert_distance(g, g_star)};
    for (int l = 0; l < 8; ++l) {
        g = truncate_clamp(l1_normalize(apply_C_hat(*clouds, g, cfg.mode, 64)).first, cfg.bounds.gstar_min(),
                           cfg.bounds.gstar_max());
        dist.push_back(hilbert_distance(g, g_star));
    }
    const double floor = dist.back();
    for (std::size_t l = 0; l + 1 < dist.size(); ++l) CHECK(dist[l + 1] <= std::max(dist[l], 1.2 * floor));
    // The first step moves toward the fixed point; the tail sits at the floor.
    CHECK(dist[1] < dist[0]);
    CHECK(dist.back() < dist.front());
}

TEST_CASE("auto iteration cap from the rate rule") {
    CHECK(rate_iteration_cap(1024, 1, 1.0, 0.06) == 1);   // 0.4*log(1024)/log(1/0.06) = 0.98
    CHECK(rate_iteration_cap(100000000, 3, 0.5, 0.5) == 7);  // 0.25*log(1e8)/log 2
    CHECK(rate_iteration_cap(1000, 1, 1.0, 0.99) == 200);  // clamped hard cap

    SolveFixture fx;
    SolverConfig cfg = fx.config(2000, 21);
    cfg.max_iterations = 0;  // auto
    cfg.stop_tol = 1e-9;     // force the cap, not the tolerance, to stop us
    const SchrodingerSolution sol = picard_solve(fx.model, fx.rho0, fx.rhoT, cfg);
    CHECK(sol.trace.iterations >= 3);
    CHECK(sol.trace.iterations <= 20);
    CHECK_FALSE(sol.trace.converged);
}
