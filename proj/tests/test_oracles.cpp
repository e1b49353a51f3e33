#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbfr/oracles.hpp"
#include "sbfr/rng.hpp"

using namespace sbfr;

namespace {

Marginal uniform_marginal(const Box& box) {
    Marginal m;
    m.support = box;
    const double density = 1.0 / box.volume();
    m.pdf = [density](const Vec&) { return density; };
    m.min_value = m.max_value = density;
    return m;
}

GridProblem random_problem(RandomStream& rng, std::size_t n0, std::size_t nT, double q_lo, double q_hi) {
    std::vector<double> rho0(n0), rhoT(nT), w0(n0, 1.0), wT(nT, 1.0), kernel(n0 * nT);
    for (double& v : rho0) v = rng.uniform(0.2, 2.0);
    for (double& v : rhoT) v = rng.uniform(0.2, 2.0);
    for (double& v : kernel) v = std::exp(rng.uniform(std::log(q_lo), std::log(q_hi)));
    return GridProblem::from_vectors(rho0, rhoT, w0, wT, kernel);
}

}  // namespace

TEST_CASE("flat kernel: fixed point reached in one step") {
    const GridProblem p = GridProblem::from_vectors({0.4, 0.6}, {0.3, 0.7}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0, 1.0, 1.0});
    const GridSolution sol = grid_fixed_point(p, 1e-13, 50);
    CHECK(sol.g_star[0] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(sol.g_star[1] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(sol.iterations <= 2);
    CHECK(sol.residual < 1e-13);
}

TEST_CASE("asymmetric 2x2 kernel: fixed point solves the discrete system") {
    const GridProblem p = GridProblem::from_vectors({0.5, 0.5}, {0.5, 0.5}, {1.0, 1.0}, {1.0, 1.0}, {2.0, 1.0, 1.0, 2.0});
    const GridSolution sol = grid_fixed_point(p, 1e-14, 500);
    CHECK(sol.residual < 1e-12);
    // Normalization under the quadrature weights.
    CHECK(sol.g_star[0] + sol.g_star[1] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("per-iteration contraction of the exact operator") {
    RandomStream rng(404, StreamDomain::oracle_init, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const GridProblem p = random_problem(rng, 8, 8, 0.5, 3.0);
        const double ceiling = p.contraction_ceiling();
        std::vector<double> f(8), g(8);
        for (double& v : f) v = std::exp(rng.uniform(-1.0, 1.0));
        for (double& v : g) v = std::exp(rng.uniform(-1.0, 1.0));
        for (int step = 0; step < 6; ++step) {
            const double before = hilbert_distance(std::span<const double>(f), std::span<const double>(g));
            const std::vector<double> Cf = grid_apply_C(p, f);
            const std::vector<double> Cg = grid_apply_C(p, g);
            const double after = hilbert_distance(std::span<const double>(Cf), std::span<const double>(Cg));
            CHECK(after <= ceiling * before + 1e-12);
            f = Cf;
            g = Cg;
        }
    }
}

TEST_CASE("uniqueness up to scale: random initializations coincide") {
    RandomStream rng(405, StreamDomain::oracle_init, 1);
    const double tol = 1e-12;
    for (int trial = 0; trial < 5; ++trial) {
        const GridProblem p = random_problem(rng, 16, 16, 0.4, 2.5);
        std::vector<double> g0a(16), g0b(16);
        for (double& v : g0a) v = std::exp(rng.uniform(-1.5, 1.5));
        for (double& v : g0b) v = std::exp(rng.uniform(-1.5, 1.5));
        const GridSolution a = grid_fixed_point(p, tol, 2000, &g0a);
        const GridSolution b = grid_fixed_point(p, tol, 2000, &g0b);
        CHECK(hilbert_distance(std::span<const double>(a.g_star), std::span<const double>(b.g_star)) < 10.0 * tol);
        CHECK(a.residual < 10.0 * tol);
    }
}

TEST_CASE("closed-form Brownian density and Chapman-Kolmogorov") {
    const DiffusionModel bm = closed_form_model(ModelKind::brownian, 1, 1.0);
    CHECK(bm.trans_density(0.0, {0.0}, 1.0, {0.0}) == doctest::Approx(0.398942).epsilon(1e-6));

    // Midpoint quadrature of the composition over a wide box.
    const double x = 0.3, y = -0.2;
    const int m = 4001;
    const double lo = -8.0, hi = 8.0;
    const double h = (hi - lo) / (m - 1);
    double conv = 0.0;
    for (int k = 0; k < m; ++k) {
        const double u = lo + k * h;
        const double w = (k == 0 || k == m - 1) ? 0.5 : 1.0;
        conv += w * bm.trans_density(0.0, {x}, 0.5, {u}) * bm.trans_density(0.5, {u}, 1.0, {y});
    }
    conv *= h;
    CHECK(std::abs(conv - bm.trans_density(0.0, {x}, 1.0, {y})) < 1e-6);

    // theta = 0 OU reduces to Brownian.
    const DiffusionModel ou0 = closed_form_model(ModelKind::ou, 1, 1.0, 0.0);
    for (double z : {-1.0, 0.0, 0.7}) {
        CHECK(ou0.trans_density(0.0, {0.2}, 1.0, {z}) == doctest::Approx(bm.trans_density(0.0, {0.2}, 1.0, {z})).epsilon(1e-12));
    }
}

TEST_CASE("closed-form box masses against quadrature") {
    const DiffusionModel ou = closed_form_model(ModelKind::ou, 1, 0.8, 0.7);
    const Box box({-0.3}, {0.9});
    const Vec x{0.4};
    const int m = 40001;
    const double h = (box.hi[0] - box.lo[0]) / (m - 1);
    double quad = 0.0;
    for (int k = 0; k < m; ++k) {
        const double z = box.lo[0] + k * h;
        const double w = (k == 0 || k == m - 1) ? 0.5 : 1.0;
        quad += w * ou.trans_density(0.0, x, 1.0, {z});
    }
    quad *= h;
    CHECK(ou.forward_box_mass(x, box) == doctest::Approx(quad).epsilon(1e-8));

    double quad_rev = 0.0;
    const Vec z{0.1};
    for (int k = 0; k < m; ++k) {
        const double u = box.lo[0] + k * h;
        const double w = (k == 0 || k == m - 1) ? 0.5 : 1.0;
        quad_rev += w * ou.trans_density(0.0, {u}, 1.0, z);
    }
    quad_rev *= h;
    CHECK(ou.reverse_box_mass(z, box) == doctest::Approx(quad_rev).epsilon(1e-8));
}

TEST_CASE("degenerate potentials") {
    const DiffusionModel bm = closed_form_model(ModelKind::brownian, 1, 1.0);
    auto q01 = [&](const Vec& x, const Vec& z) { return bm.trans_density(0.0, x, 1.0, z); };
    const Box box = Box::unit(1);

    SUBCASE("both atoms: endpoint measure integrates to exactly 1") {
        const DegeneratePotentials d = degenerate_potentials(DegenerateCase::both_atoms, {0.2}, {0.8}, Marginal{}, q01, 64);
        REQUIRE(d.nu0_atom.has_value());
        REQUIRE(d.nuT_atom.has_value());
        const double mass = d.nu0_mass * q01(*d.nu0_atom, *d.nuT_atom) * d.nuT_mass;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-15));
    }

    SUBCASE("start atom with proportional target is constant") {
        const Vec x0{0.3};
        Marginal rhoT;
        rhoT.support = box;
        // rho_T proportional to q(0, x0; 1, .) on [0,1].
        const double mass = bm.forward_box_mass(x0, box);
        rhoT.pdf = [&, mass](const Vec& z) { return q01(x0, z) / mass; };
        rhoT.min_value = rhoT.pdf({1.0});
        rhoT.max_value = rhoT.pdf({0.3});
        const DegeneratePotentials d = degenerate_potentials(DegenerateCase::start_atom, x0, {}, rhoT, q01, 64);
        REQUIRE(d.nuT_density.has_value());
        CHECK(d.nuT_density->max_value() == doctest::Approx(d.nuT_density->min_value()).epsilon(1e-12));
    }

    SUBCASE("end atom satisfies the density-side equation on a 64-node lattice") {
        const Vec z0{0.75};
        const Marginal rho0 = uniform_marginal(box);
        const DegeneratePotentials d = degenerate_potentials(DegenerateCase::end_atom, {}, z0, rho0, q01, 64);
        REQUIRE(d.nu0_density.has_value());
        double worst = 0.0;
        for (std::size_t k = 0; k < d.nu0_density->node_count(); ++k) {
            const Vec x = d.nu0_density->node_point(k);
            // nu_0(x) q(0,x;1,z0) nuT_mass should reproduce rho_0(x).
            worst = std::max(worst, std::abs(d.nu0_density->value_at(k) * q01(x, z0) * d.nuT_mass - rho0.pdf(x)));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("grid fixed point reports iteration exhaustion") {
    // Asymmetric marginals so the uniform start is not already the fixed point.
    const GridProblem p = GridProblem::from_vectors({0.3, 0.7}, {0.6, 0.4}, {1.0, 1.0}, {1.0, 1.0}, {2.0, 1.0, 1.0, 2.0});
    try {
        grid_fixed_point(p, 1e-14, 1);
        FAIL("expected max_iter exhaustion");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("increment") != std::string::npos);
    }
}

TEST_CASE("closed-form densities integrate to one over a bounding box") {
    for (ModelKind kind : {ModelKind::brownian, ModelKind::ou}) {
        const DiffusionModel m = closed_form_model(kind, 1, 0.9, 0.8);
        const Vec x{0.3};
        for (double s : {0.0, 0.25}) {
            const double t = 1.0;
            const int n = 20001;
            const double lo = -12.0, hi = 12.0, h = (hi - lo) / (n - 1);
            double mass = 0.0;
            for (int k = 0; k < n; ++k) {
                const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
                mass += w * m.trans_density(s, x, t, {lo + h * k});
            }
            CHECK(mass * h == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}
