#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "sbfr/oracles.hpp"
#include "sbfr/parallel.hpp"
#include "sbfr/sde.hpp"

using namespace sbfr;

namespace {

DiffusionModel deterministic_1d(std::function<double(double)> drift_of_x) {
    DiffusionModel m;
    m.dim = 1;
    m.noise_dim = 1;
    m.horizon = 1.0;
    m.drift = [drift_of_x](double, const Vec& x) { return Vec{drift_of_x(x[0])}; };
    m.diffusion = [](double, const Vec&) { return Mat(1, 1, 0.0); };
    return m;
}

}  // namespace

TEST_CASE("forward Euler path: exact for constant and frozen dynamics") {
    RandomStream rng(1, StreamDomain::generic, 0);
    const DiffusionModel unit_drift = deterministic_1d([](double) { return 1.0; });
    for (int steps : {1, 7, 64}) {
        const Path p = simulate_forward(unit_drift, {0.0}, steps, rng);
        CHECK(p.terminal()[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p.steps() == steps);
    }
    const DiffusionModel frozen = deterministic_1d([](double) { return 0.0; });
    const Path p = simulate_forward(frozen, {3.0}, 16, rng);
    for (int k = 0; k <= p.steps(); ++k) CHECK(p.state(k)[0] == 3.0);
}

TEST_CASE("forward Euler path: ODE flow error halves order for x' = -x") {
    RandomStream rng(1, StreamDomain::generic, 1);
    const DiffusionModel decay = deterministic_1d([](double x) { return -x; });
    const double exact = std::exp(-1.0);
    double prev_err = 1.0;
    for (int k = 2; k <= 10; ++k) {
        const Path p = simulate_forward(decay, {1.0}, 1 << k, rng);
        const double err = std::abs(p.terminal()[0] - exact);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-3);
}

TEST_CASE("explosion reporting names the step") {
    DiffusionModel blowup = deterministic_1d([](double x) { return x * x * 1e8; });
    RandomStream rng(1, StreamDomain::generic, 2);
    CHECK_THROWS_AS(simulate_forward(blowup, {10.0}, 64, rng), SimulationError);
    try {
        simulate_forward(blowup, {10.0}, 64, rng);
    } catch (const SimulationError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("reverse model coefficients: Brownian, OU, quadratic diffusion") {
    // Brownian: alpha = 0, c = 0.
    const DiffusionModel bm = closed_form_model(ModelKind::brownian, 1, 1.0);
    const ReverseModel rbm = derive_reverse_model(bm);
    CHECK(rbm.alpha(0.3, {0.7})[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rbm.potential(0.3, {0.7}) == doctest::Approx(0.0).epsilon(1e-12));

    // OU with theta = 1: alpha(s, y) = y, c = 1.
    const DiffusionModel ou = closed_form_model(ModelKind::ou, 1, 1.0, 1.0);
    const ReverseModel rou = derive_reverse_model(ou);
    CHECK(rou.alpha(0.2, {0.4})[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(rou.potential(0.2, {0.4}) == doctest::Approx(1.0).epsilon(1e-12));

    // d = 1, a = 0, b(x) = 1 + x^2 (sigma = sqrt(b)): alpha = 2y, c = 1, via
    // the finite-difference fallback.
    DiffusionModel quad;
    quad.dim = quad.noise_dim = 1;
    quad.horizon = 1.0;
    quad.drift = [](double, const Vec&) { return Vec{0.0}; };
    quad.diffusion = [](double, const Vec& x) { return Mat(1, 1, std::sqrt(1.0 + x[0] * x[0])); };
    const ReverseModel rq = derive_reverse_model(quad);
    CHECK(rq.alpha(0.5, {0.3})[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(rq.potential(0.5, {0.3}) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rq.sigma_tilde(0.5, {0.3})(0, 0) == doctest::Approx(std::sqrt(1.09)).epsilon(1e-12));
}

TEST_CASE("reverse simulation: weights") {
    // Brownian: weight stays exactly 1.
    const DiffusionModel bm = closed_form_model(ModelKind::brownian, 1, 1.0);
    RandomStream rng(5, StreamDomain::generic, 3);
    const Path p = simulate_reverse(derive_reverse_model(bm), {0.0}, 32, rng);
    for (int k = 0; k <= p.steps(); ++k) CHECK(p.weight(k) == doctest::Approx(1.0).epsilon(1e-15));

    // OU with sigma~ = 0: dy = y ds from 1 gives Y_1 = e and weight e.
    DiffusionModel ou_nodiff;
    ou_nodiff.dim = ou_nodiff.noise_dim = 1;
    ou_nodiff.horizon = 1.0;
    ou_nodiff.drift = [](double, const Vec& x) { return Vec{-x[0]}; };
    ou_nodiff.diffusion = [](double, const Vec&) { return Mat(1, 1, 0.0); };
    const ReverseModel r = derive_reverse_model(ou_nodiff);
    RandomStream rng2(5, StreamDomain::generic, 4);
    const Path q = simulate_reverse(r, {1.0}, 1 << 12, rng2);
    CHECK(q.terminal()[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-3));
    CHECK(q.terminal_weight() == doctest::Approx(std::exp(1.0)).epsilon(1e-6));

    // Weight overflow reported distinctly.
    DiffusionModel hot = ou_nodiff;
    hot.drift = [](double, const Vec& x) { return Vec{-2000.0 * x[0]}; };
    RandomStream rng3(5, StreamDomain::generic, 5);
    CHECK_THROWS_AS(simulate_reverse(derive_reverse_model(hot), {1.0}, 8, rng3), WeightOverflowError);
}

TEST_CASE("reverse representation: E[g(Y_T) W_T] matches the adjoint integral") {
    // d = 1 Brownian, g(x) = x: integral of q(0, x; 1, y) x dx = y.
    const DiffusionModel bm = closed_form_model(ModelKind::brownian, 1, 1.0);
    const ReverseModel rev = derive_reverse_model(bm);
    const double y = 0.6;
    const std::size_t n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream rng(42, StreamDomain::reverse_path, i);
        const Path p = simulate_reverse(rev, {y}, 16, rng);
        const double v = p.terminal()[0] * p.terminal_weight();
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean - y) <= 3.0 * se);
}

TEST_CASE("sample_cloud: determinism, degenerate cases, increment variance") {
    const DiffusionModel bm = closed_form_model(ModelKind::brownian, 1, 1.0);
    const SamplerDensity phi = SamplerDensity::uniform(Box::unit(1));

    const PathCloud empty = sample_cloud(bm, phi, 0, 8, CloudDirection::forward, 9);
    CHECK(empty.size() == 0);

    // Frozen dynamics: endpoints equal start points.
    DiffusionModel frozen;
    frozen.dim = frozen.noise_dim = 1;
    frozen.horizon = 1.0;
    frozen.drift = [](double, const Vec&) { return Vec{0.0}; };
    frozen.diffusion = [](double, const Vec&) { return Mat(1, 1, 0.0); };
    const PathCloud fixed = sample_cloud(frozen, phi, 100, 8, CloudDirection::forward, 9);
    for (std::size_t i = 0; i < fixed.size(); ++i) CHECK(fixed.end(i)[0] == fixed.start(i)[0]);

    // Same seed, different thread caps: bit-identical clouds.
    set_thread_cap(1);
    const PathCloud c1 = sample_cloud(bm, phi, 5000, 8, CloudDirection::forward, 77);
    set_thread_cap(4);
    const PathCloud c4 = sample_cloud(bm, phi, 5000, 8, CloudDirection::forward, 77);
    set_thread_cap(0);
    CHECK(c1.starts == c4.starts);
    CHECK(c1.ends == c4.ends);

    // Empirical variance of the increments is close to T.
    const std::size_t n = 100000;
    const PathCloud big = sample_cloud(bm, phi, n, 16, CloudDirection::forward, 123);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double inc = big.end(i)[0] - big.start(i)[0];
        sum += inc;
        sumsq += inc * inc;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    // SE of a Gaussian variance estimate: var * sqrt(2/n).
    CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("OU weak error decreases when steps double") {
    const DiffusionModel ou = closed_form_model(ModelKind::ou, 1, 1.0, 1.0);
    const double exact = std::exp(-1.0);  // E[X_1] from x0 = 1
    std::vector<double> errs;
    for (int steps : {4, 8, 16, 32}) {
        double sum = 0.0;
        const std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            RandomStream rng(31, StreamDomain::forward_path, i + 1000000ull * static_cast<std::uint64_t>(steps));
            sum += simulate_forward(ou, {1.0}, steps, rng).terminal()[0];
        }
        errs.push_back(std::abs(sum / n - exact));
    }
    for (std::size_t k = 1; k < errs.size(); ++k) CHECK(errs[k] < errs[k - 1] + 2e-3);
    CHECK(errs.back() < 5e-3);
}

TEST_CASE("grid_containing inserts mandatory times") {
    const std::vector<double> g = grid_containing(1.0, 10, {0.25, 0.5});
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] > g[k - 1]);
    Path p;
    p.times = g;
    CHECK(p.times[static_cast<std::size_t>(p.index_of_time(0.25))] == doctest::Approx(0.25));
    CHECK(p.times[static_cast<std::size_t>(p.index_of_time(0.5))] == doctest::Approx(0.5));
}
