#include "blhomlab/blsolver.hpp"

#include "blhomlab/errors.hpp"
#include "blhomlab/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blhomlab;
using namespace blhomlab::blsolver;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

geometry::NormalFrame axis_frame(double a = 0.0) {
    double raw[2] = {0.0, 1.0};
    return geometry::build_frame(std::span<const double>(raw, 2), a);
}

} // namespace

TEST_CASE("series solver: golden-frame decay rate") {
    FourierBoundaryData v0;
    v0.add_cosine({1, 0}, 1.0);
    auto field = solve_series_laplacian(v0, geometry::golden_direction(0.0));

    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double rate = kTwoPi / std::sqrt(1.0 + phi * phi);
    for (const auto& m : field.modes) CHECK(m.rate == doctest::Approx(rate).epsilon(1e-12));

    // V(theta, t) = e^{-2 pi r t} cos(2 pi theta_1)
    for (double t : {0.0, 0.5, 2.0}) {
        for (double th : {0.0, 0.3, 0.85}) {
            double expect = std::exp(-rate * t) * std::cos(kTwoPi * th);
            CHECK(field.eval_theta(th, 0.11, t) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    CHECK(field.tail() == 0.0);
}

TEST_CASE("series solver: constants persist; rates are nonnegative") {
    FourierBoundaryData v0;
    v0.set_constant(0.7);
    v0.add_cosine({2, -1}, 0.25);
    auto field = solve_series_laplacian(v0, geometry::golden_direction(0.0));
    for (const auto& m : field.modes) {
        if (m.xi[0] == 0 && m.xi[1] == 0)
            CHECK(m.rate == 0.0);
        else
            CHECK(m.rate > 0.0);
    }
    CHECK(field.eval_theta(0.2, 0.9, 1e6) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(field.tail() == doctest::Approx(0.7));
}

TEST_CASE("series Parseval: mode sum equals grid quadrature to 1e-10") {
    FourierBoundaryData v0;
    v0.set_constant(0.3);
    v0.add_cosine({1, 0}, 1.0);
    v0.add_cosine({0, 1}, 0.5);
    v0.add_sine({2, 1}, 0.4);
    auto field = solve_series_laplacian(v0, geometry::golden_direction(0.0));
    const int n = 128;
    for (double t : {0.0, 0.7, 2.5}) {
        double acc = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double d = field.eval_theta(double(i) / n, double(j) / n, t) - field.tail();
                acc += d * d;
            }
        }
        double quad = std::sqrt(acc / double(n) / double(n));
        CHECK(quad == doctest::Approx(field.l2_deviation(t)).epsilon(1e-10));
    }
}

TEST_CASE("series evaluation: boundary value and tail bound") {
    FourierBoundaryData v0;
    v0.add_cosine({1, 0}, 0.8);
    v0.add_sine({1, 1}, 0.3);
    auto field = solve_series_laplacian(v0, geometry::golden_direction(0.0));
    for (double th1 : {0.0, 0.4}) {
        CHECK(field.eval_theta(th1, 0.2, 0.0) == doctest::Approx(v0.eval(th1, 0.2)));
    }
    // |V - tail| <= sum of |coeff| e^{-min rate t}
    double coef_sum = 0;
    for (const auto& m : field.modes) {
        if (m.xi[0] || m.xi[1]) coef_sum += std::abs(m.coeff);
    }
    double rmin = field.min_positive_rate();
    for (double t : {1.0, 3.0}) {
        double bound = coef_sum * std::exp(-rmin * t);
        CHECK(std::abs(field.eval_theta(0.13, 0.57, t) - field.tail()) <= bound + 1e-15);
    }
}

TEST_CASE("rational strip: exact harmonic extension at criterion resolution") {
    auto coeffs = cell::PeriodicCoefficients::identity(16);
    auto frame = axis_frame();
    auto v0 = [](double y1, double) { return std::sin(kTwoPi * y1); };
    auto field = solve_rational_strip(coeffs, v0, frame, 6.0, 64, 512);

    double sup = 0;
    for (int j = 0; j <= field.nt; ++j) {
        double t = j * field.T / field.nt;
        for (int i = 0; i < field.n1; ++i) {
            double z1 = i * field.length1 / field.n1;
            double exact = std::exp(-kTwoPi * t) * std::sin(kTwoPi * z1);
            sup = std::max(sup, std::abs(field.at(j, i) - exact));
        }
    }
    CHECK(sup <= 1e-4);

    // grid nodes are returned exactly by the evaluator; interpolation is sane
    CHECK(field.eval(3.0 / 64.0, 0.0) == doctest::Approx(field.at(0, 3)));
    CHECK(field.eval(0.137, 1.31) ==
          doctest::Approx(std::exp(-kTwoPi * 1.31) * std::sin(kTwoPi * 0.137)).epsilon(1e-2));
    CHECK_THROWS_AS(field.eval(0.1, 6.5), std::out_of_range);

    // maximum principle and slab-wise gradient decay
    CHECK(field.min_value() >= -1.0 - 1e-9);
    CHECK(field.max_value() <= 1.0 + 1e-9);
    double prev = field.grad_sup_norm(0.0, 1.0);
    for (int k = 1; k + 1 < 6; ++k) {
        double cur = field.grad_sup_norm(double(k), double(k + 1));
        CHECK(cur <= prev * (1.0 + 1e-9));
        prev = cur;
    }
}

TEST_CASE("rational strip: constants are solutions") {
    auto coeffs = cell::PeriodicCoefficients::layered_cosine(16);
    auto field = solve_rational_strip(
        coeffs, [](double, double) { return 1.0; }, axis_frame(), 6.0, 16, 64);
    CHECK(field.min_value() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(field.max_value() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rational strip: constant anisotropic coefficients against the exact rate") {
    auto coeffs = cell::PeriodicCoefficients::sample(16, [](double, double) {
        return std::array<double, 4>{2.0, 0.5, 0.5, 1.0};
    });
    auto frame = axis_frame();
    auto v0 = [](double y1, double) { return std::cos(kTwoPi * y1); };
    auto field = solve_rational_strip(coeffs, v0, frame, 6.0, 64, 512);
    // mode solution e^{-alpha z2} cos(2 pi (z1 - (B12/B22) z2)),
    // alpha = 2 pi sqrt(det B)/B22
    const double alpha = kTwoPi * std::sqrt(2.0 * 1.0 - 0.25) / 1.0;
    double sup = 0;
    for (int j = 0; j <= field.nt; ++j) {
        double t = j * field.T / field.nt;
        for (int i = 0; i < field.n1; ++i) {
            double z1 = i * field.length1 / field.n1;
            double exact = std::exp(-alpha * t) * std::cos(kTwoPi * (z1 - 0.5 * t));
            sup = std::max(sup, std::abs(field.at(j, i) - exact));
        }
    }
    CHECK(sup <= 5e-3);
}

TEST_CASE("rational strip: rejects bad inputs") {
    auto coeffs = cell::PeriodicCoefficients::identity(16);
    auto v0 = [](double, double) { return 0.0; };
    CHECK_THROWS_AS(
        solve_rational_strip(coeffs, v0, geometry::golden_direction(0.0), 6.0, 16, 64),
        InvalidInput);
    CHECK_THROWS_AS(solve_rational_strip(coeffs, v0, axis_frame(), 2.0, 16, 64), InvalidInput);
    auto nonsym = cell::PeriodicCoefficients::sample(16, [](double y1, double) {
        return std::array<double, 4>{2.0, 0.2 * std::sin(kTwoPi * y1), 0.0, 2.0};
    });
    CHECK_THROWS_AS(solve_rational_strip(nonsym, v0, axis_frame(), 6.0, 16, 64), InvalidInput);
}

TEST_CASE("series/grid agreement for a rational direction") {
    auto coeffs = cell::PeriodicCoefficients::identity(16);
    auto frame = axis_frame();
    FourierBoundaryData data;
    data.add_cosine({1, 0}, 1.0);
    auto series = solve_series_laplacian(data, frame);
    auto grid = solve_rational_strip(
        coeffs, [&](double y1, double y2) { return data.eval(y1, y2); }, frame, 6.0, 64, 512);
    for (double z1 : {0.03, 0.41, 0.77}) {
        for (double t : {0.2, 0.9, 2.2}) {
            CHECK(grid.eval(z1, t) ==
                  doctest::Approx(series.eval_tangential(z1, t)).epsilon(2e-3));
        }
    }
}

TEST_CASE("quasiperiodic solver: constants, argument checks") {
    auto coeffs = cell::PeriodicCoefficients::layered_cosine(16);
    auto frame = geometry::golden_direction(0.0);
    FourierBoundaryData c;
    c.set_constant(0.4);
    auto field = solve_quasiperiodic_regularized(coeffs, c, frame, 1e-2, 2.0, 8, 32);
    CHECK(field.min_value() == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(field.max_value() == doctest::Approx(0.4).epsilon(1e-9));

    CHECK_THROWS_AS(solve_quasiperiodic_regularized(coeffs, c, frame, 0.0, 2.0, 8, 32),
                    InvalidInput);
    CHECK_THROWS_AS(solve_quasiperiodic_regularized(coeffs, c, frame, -1.0, 2.0, 8, 32),
                    InvalidInput);
    FourierBoundaryData steep;
    steep.add_cosine({5, 0}, 1.0);
    CHECK_THROWS_AS(solve_quasiperiodic_regularized(coeffs, steep, frame, 1e-2, 2.0, 8, 32),
                    InvalidInput); // theta grid under-resolves the data
}

TEST_CASE("quasiperiodic solver: iota refinement approaches the exact series") {
    auto coeffs = cell::PeriodicCoefficients::identity(16);
    auto frame = geometry::golden_direction(0.0);
    FourierBoundaryData data;
    data.add_cosine({1, 0}, 1.0);
    auto series = solve_series_laplacian(data, frame);

    double prev_err = std::numeric_limits<double>::infinity();
    for (double iota : {1e-1, 1e-2, 1e-3}) {
        auto field = solve_quasiperiodic_regularized(coeffs, data, frame, iota, 4.0, 8, 512);
        double err = 0;
        for (int i1 = 0; i1 < 8; ++i1) {
            for (int i2 = 0; i2 < 8; ++i2) {
                double ex = series.eval_theta(i1 / 8.0, i2 / 8.0, 1.0);
                err = std::max(err, std::abs(field.eval_theta(i1 / 8.0, i2 / 8.0, 1.0) - ex));
            }
        }
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err <= 1e-2);

    // maximum principle for the regularized solve
    auto field = solve_quasiperiodic_regularized(coeffs, data, frame, 1e-3, 4.0, 8, 256);
    CHECK(field.min_value() >= -1.0 - 1e-9);
    CHECK(field.max_value() <= 1.0 + 1e-9);
}

TEST_CASE("quasiperiodic solver: discrete energy tends to the series value") {
    auto coeffs = cell::PeriodicCoefficients::identity(16);
    auto frame = geometry::golden_direction(0.0);
    FourierBoundaryData data;
    data.add_cosine({1, 0}, 1.0);
    auto series = solve_series_laplacian(data, frame);
    double k_exact = st_venant_energy(series, 0.0);

    double prev_gap = std::numeric_limits<double>::infinity();
    for (int nt : {64, 128, 256}) {
        double iota = (4.0 / nt) * (4.0 / nt); // regularization at discretization size
        auto field = solve_quasiperiodic_regularized(coeffs, data, frame, iota, 4.0, 8, nt);
        auto est = st_venant_energy(field, 0.0);
        double gap = std::abs(est.value - k_exact);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap <= 5e-2 * k_exact);
}

TEST_CASE("st_venant energy: closed form against quadrature") {
    FourierBoundaryData v0;
    v0.add_cosine({1, 0}, 1.0);
    v0.add_sine({0, 1}, 0.6);
    auto field = solve_series_laplacian(v0, geometry::golden_direction(0.0));

    // independent oracle: K(T) = int_T^inf sum 2 r^2 |c|^2 e^{-2 r t} dt by
    // high-resolution Simpson on a truncated interval plus the exact tail
    auto oracle = [&](double T) {
        double rmin = field.min_positive_rate();
        double upper = T + 60.0 / rmin;
        const int n = 200000;
        double h = (upper - T) / n;
        double acc = 0;
        auto integrand = [&](double t) {
            double s = 0;
            for (const auto& m : field.modes) {
                if (m.xi[0] == 0 && m.xi[1] == 0) continue;
                s += 2.0 * m.rate * m.rate * std::norm(m.coeff) * std::exp(-2.0 * m.rate * t);
            }
            return s;
        };
        acc = integrand(T) + integrand(upper);
        for (int i = 1; i < n; ++i) acc += integrand(T + i * h) * (i % 2 ? 4.0 : 2.0);
        return acc * h / 3.0;
    };
    for (double T : {0.0, 0.5, 2.0}) {
        CHECK(st_venant_energy(field, T) == doctest::Approx(oracle(T)).epsilon(1e-10));
    }

    FourierBoundaryData c;
    c.set_constant(2.0);
    auto cf = solve_series_laplacian(c, geometry::golden_direction(0.0));
    CHECK(st_venant_energy(cf, 1.0) == 0.0);

    double prev = st_venant_energy(field, 0.0);
    for (double T : {0.5, 1.0, 2.0, 4.0}) {
        double cur = st_venant_energy(field, T);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("st_venant energy on grids matches the series within the remainder") {
    auto coeffs = cell::PeriodicCoefficients::identity(16);
    auto frame = axis_frame();
    FourierBoundaryData data;
    data.add_sine({1, 0}, 1.0);
    auto series = solve_series_laplacian(data, frame);
    auto grid = solve_rational_strip(
        coeffs, [&](double y1, double y2) { return data.eval(y1, y2); }, frame, 6.0, 64, 512);
    for (double T : {0.5, 1.0}) {
        auto est = st_venant_energy(grid, T);
        double exact = st_venant_energy(series, T);
        CHECK(est.value + est.remainder_bound ==
              doctest::Approx(exact).epsilon(2e-2)); // second-order grid error
    }
    CHECK_THROWS_AS(st_venant_energy(grid, 7.0), std::out_of_range);
}

TEST_CASE("rectangle solver: identity coefficients reproduce the homogenized solve") {
    auto coeffs = cell::PeriodicCoefficients::identity(16);
    auto f = [](double x1, double x2) {
        double dx = x1 - 0.5, dy = x2 - 0.5;
        double r2 = dx * dx + dy * dy;
        return r2 < 0.04 ? std::exp(-r2 / (0.04 - r2)) : 0.0;
    };
    auto sol = dirichlet_rect_solver(coeffs, 0.125, f, 1.0, 65);
    double diff = 0;
    for (size_t i = 0; i < sol.u_eps.size(); ++i)
        diff = std::max(diff, std::abs(sol.u_eps[i] - sol.u_hom[i]));
    CHECK(diff <= 1e-8);

    CHECK_THROWS_AS(dirichlet_rect_solver(coeffs, 1.0 / 32.0, f, 1.0, 65), InvalidInput);
}

TEST_CASE("homogenization sweep: layered slope near first order") {
    auto coeffs = cell::PeriodicCoefficients::layered_cosine(32);
    auto f = [](double x1, double x2) {
        double dx = x1 - 0.5, dy = x2 - 0.45;
        double r2 = dx * dx + dy * dy;
        double rho2 = 0.22 * 0.22;
        return r2 < rho2 ? std::exp(-r2 / (rho2 - r2)) : 0.0;
    };
    auto rep = homogenization_error_sweep(coeffs, f, {0.125, 0.09375, 0.0625}, 1.0, 129);
    CHECK_FALSE(rep.degenerate);
    for (const auto& r : rep.rows) CHECK(r.interior_linf > 0);
    CHECK(rep.slope >= 0.8);
    CHECK(rep.slope <= 1.5);

    auto ident = cell::PeriodicCoefficients::identity(16);
    auto drep = homogenization_error_sweep(ident, f, {0.5, 0.25, 0.125}, 1.0, 65);
    CHECK(drep.degenerate);
}
