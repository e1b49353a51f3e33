#include <doctest.h>

#include <cmath>

#include "sbfr/clouds.hpp"
#include "sbfr/kernel.hpp"

using namespace sbfr;

TEST_CASE("kernel evaluation and scaling") {
    const Kernel k1(1);
    CHECK(k1({0.0}) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(k1({0.6}) == 0.0);
    CHECK(k1({-0.50001}) == 0.0);
    CHECK(k1({0.5}) == doctest::Approx(0.0));

    const Kernel k3(3);
    CHECK(k3({0.0, 0.0, 0.0}) == doctest::Approx(std::pow(1.5, 3)).epsilon(1e-13));
    CHECK(k3.sup_norm() == doctest::Approx(std::pow(1.5, 3)));

    const double eps = 0.01;
    CHECK(kernel_eval(k1, {0.0}, eps) == doctest::Approx(1.5 / eps).epsilon(1e-13));
    CHECK(kernel_eval(k3, {0.0, 0.0, 0.0}, eps) == doctest::Approx(std::pow(1.5 / eps, 3)).epsilon(1e-12));
    // Outside the scaled support.
    CHECK(kernel_eval(k1, {0.6 * eps}, eps) == 0.0);
    CHECK_THROWS_AS(kernel_eval(k1, {0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("kernel mass under quadrature") {
    // Scaled kernel integrates to one: trapezoid over the support.
    const Kernel k1(1);
    const double scale = 0.37;
    const int n = 20001;
    const double h = scale / (n - 1);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = -0.5 * scale + h * i;
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        mass += w * kernel_eval(k1, {u}, scale);
    }
    CHECK(mass * h == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("default bandwidth rule") {
    CHECK(default_bandwidth(1024, 1, 1.0) == doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(default_bandwidth(10000, 2, 1.0) == doctest::Approx(std::pow(10000.0, -2.0 / 6.0)).epsilon(1e-12));
    CHECK(default_bandwidth(10000, 2, 1.0) == doctest::Approx(0.0464).epsilon(1e-3));
    // Monotone toward 1 from below as the dimension grows.
    double prev = 0.0;
    for (int d = 1; d <= 8; ++d) {
        const double delta = default_bandwidth(1000, d, 1.0);
        CHECK(delta > prev);
        CHECK(delta < 1.0);
        prev = delta;
    }
    CHECK_THROWS_AS(default_bandwidth(10, 1, 0.0), std::domain_error);
    CHECK_THROWS_AS(default_bandwidth(10, 1, 1.5), std::domain_error);
    CHECK_THROWS_AS(default_bandwidth(1, 1, 1.0), std::invalid_argument);
}
