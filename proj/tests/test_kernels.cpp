#include "blhomlab/kernels.hpp"

#include "blhomlab/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blhomlab;
using namespace blhomlab::kernels;

namespace {

constexpr double kPi = std::numbers::pi;

geometry::NormalFrame axis_frame(double a = 0.0) {
    double raw[2] = {0.0, 1.0};
    return geometry::build_frame(std::span<const double>(raw, 2), a);
}

} // namespace

TEST_CASE("poisson kernel: classical value and symmetry") {
    auto f = axis_frame();
    CHECK(poisson_kernel(f, {0.0, 1.0}, {0.0, 0.0}) == doctest::Approx(1.0 / kPi));
    for (double s : {0.3, 1.7, 4.0}) {
        CHECK(poisson_kernel(f, {0.0, 2.0}, {s, 0.0}) ==
              doctest::Approx(poisson_kernel(f, {0.0, 2.0}, {-s, 0.0})));
    }
    CHECK_THROWS_AS(poisson_kernel(f, {0.0, -0.5}, {0.0, 0.0}), InvalidInput);
    CHECK_THROWS_AS(poisson_kernel(f, {0.0, 1.0}, {0.0, 0.2}), InvalidInput);
}

TEST_CASE("poisson kernel: exact scaling identity") {
    auto f = axis_frame();
    // P^eps(x, xt) = eps^{-1} P(x/eps, xt/eps); bitwise for power-of-two eps
    for (double eps : {0.5, 0.25, 2.0}) {
        double x1 = 0.375, x2 = 1.25, s = -0.75;
        double lhs = poisson_kernel(f, {x1, x2}, {s, 0.0});
        double rhs = poisson_kernel(f, {x1 / eps, x2 / eps}, {s / eps, 0.0}) / eps;
        CHECK(lhs == rhs);
    }
    for (double eps : {0.3, 1.7}) {
        double lhs = poisson_kernel(f, {0.2, 0.9}, {1.4, 0.0});
        double rhs = poisson_kernel(f, {0.2 / eps, 0.9 / eps}, {1.4 / eps, 0.0}) / eps;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    }
}

TEST_CASE("poisson kernel: boundary mass is one") {
    auto f = axis_frame();
    for (double h : {0.3, 1.0, 2.5}) {
        double mass = boundary_mass(f, {0.4, h});
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
    // rotated frame keeps the mass
    double raw[2] = {1.0, 1.0};
    auto g = geometry::build_frame(std::span<const double>(raw, 2), 0.5);
    double h = 1.3;
    kernels::Vec2 y{g.offset * g.n[0] + h * g.n[0], g.offset * g.n[1] + h * g.n[1]};
    CHECK(boundary_mass(g, y) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("poisson kernel: harmonic in the interior") {
    CHECK(harmonicity_residual(axis_frame()) <= 1e-6);
    CHECK(harmonicity_residual(geometry::golden_direction(0.0)) <= 1e-6);
}

TEST_CASE("kernel bounds: the sampled constants") {
    auto rep = kernel_bound_check(axis_frame());
    CHECK(rep.nonnegative);
    CHECK(rep.poisson_constant == doctest::Approx(1.0 / kPi).epsilon(1e-12));
    CHECK(rep.poisson_constant <= 1.0 / kPi + 1e-12);
    CHECK(rep.gradient_constant > 0);
    CHECK(rep.gradient_constant <= 3.0 / kPi + 1e-9); // |grad P| min(r^2, r^3/h) <= 3/pi
    CHECK(rep.green_constant <= 1.0 / kPi + 1e-9);    // log(1+x) <= x gives G <= h ht/(pi r^2)
}

TEST_CASE("poisson solve: unit data, harmonic extension, width warning") {
    auto f = axis_frame();
    std::vector<Vec2> pts = {{0.0, 0.5}, {0.3, 1.0}, {-1.2, 2.0}};

    auto one = [](double, double) { return 1.0; };
    auto res = poisson_solve(one, f, pts, {300.0, 40000});
    CHECK_FALSE(res.width_warning);
    // constants are reproduced up to the reported truncated-mass bound
    for (double v : res.values) CHECK(std::abs(v - 1.0) <= res.mass_defect + 1e-8);
    CHECK(res.mass_defect <= 1e-2);
    CHECK(res.mass_defect > 1e-4); // the omitted tail is real and reported

    auto cosd = [](double y1, double) { return std::cos(2.0 * kPi * y1); };
    auto resc = poisson_solve(cosd, f, {{0.0, 1.0}, {0.25, 1.0}}, {100.0, 100000});
    CHECK(resc.values[0] == doctest::Approx(std::exp(-2.0 * kPi)).epsilon(1e-6));
    CHECK(std::abs(resc.values[1]) <= 1e-6);

    auto warn = poisson_solve(one, f, {{0.0, 3.0}}, {100.0, 20000});
    CHECK(warn.width_warning); // W < 50 * height
}

TEST_CASE("poisson representation equals the exact series for quasiperiodic data") {
    auto frame = geometry::golden_direction(0.0);
    blsolver::FourierBoundaryData data;
    data.add_cosine({1, 0}, 1.0);
    data.add_cosine({0, 1}, 0.5);
    auto series = blsolver::solve_series_laplacian(data, frame);

    std::vector<Vec2> pts;
    std::vector<std::pair<double, double>> zs; // (z1, height)
    for (double z1 : {-0.8, 0.0, 1.2}) {
        for (double h : {0.6, 1.4}) {
            pts.push_back({z1 * frame.col[0][0] + h * frame.n[0],
                           z1 * frame.col[0][1] + h * frame.n[1]});
            zs.emplace_back(z1, h);
        }
    }
    auto v0 = [&](double y1, double y2) { return data.eval(y1, y2); };
    auto res = poisson_solve(v0, frame, pts, {2000.0, 200000});
    for (size_t i = 0; i < pts.size(); ++i) {
        double exact = series.eval_tangential(zs[i].first, zs[i].second);
        CHECK(res.values[i] == doctest::Approx(exact).epsilon(1e-6));
    }
}

TEST_CASE("green identity: boundary zero, PDE residual, bound") {
    auto frame = axis_frame();
    BumpSource f{{0.0, 2.0}, 0.75, 1.0};
    auto rep = greens_identity_check(frame, f);
    CHECK(rep.max_boundary_abs <= 1e-8);
    CHECK(rep.pde_residual <= 1e-4);
    CHECK(rep.green_bound_constant <= 1.0 / kPi + 1e-9);
}

TEST_CASE("newtonian potential: far field carries the bump mass") {
    BumpSource f{{0.0, 2.0}, 0.75, 1.0};
    double mass = 0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double x = -0.8 + 1.6 * i / n, y = 1.2 + 1.6 * j / n;
            mass += f(x, y) * (1.6 / n) * (1.6 / n);
        }
    }
    double R = 30.0;
    double far = newtonian_potential(f, {0.0, 2.0 + R});
    CHECK(far == doctest::Approx(-mass / (2.0 * kPi) * std::log(R)).epsilon(1e-3));
}

TEST_CASE("green function: image antisymmetry and positivity") {
    auto f = axis_frame();
    for (double s : {-1.0, 0.4}) {
        CHECK(std::abs(green_function(f, {s, 0.0}, {0.3, 1.1})) <= 1e-14);
    }
    CHECK(green_function(f, {0.0, 1.0}, {0.5, 0.7}) > 0.0);
}
