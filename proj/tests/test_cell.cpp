#include "blhomlab/cell.hpp"

#include "blhomlab/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blhomlab;
using namespace blhomlab::cell;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kSqrt3 = std::sqrt(3.0);

double field_max_abs(const std::vector<double>& f) {
    double m = 0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

// 1D closed-form oracle for the layered medium a(y1) = 2 + cos(2 pi y1):
// chi' = h/a - 1 with h the harmonic mean, via adaptive Simpson quadrature.
double simpson(const std::function<double(double)>& g, double a, double b, int n) {
    double h = (b - a) / n;
    double s = g(a) + g(b);
    for (int i = 1; i < n; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double layered_a(double y) { return 2.0 + std::cos(kTwoPi * y); }

double layered_harmonic_mean() {
    return 1.0 / simpson([](double t) { return 1.0 / layered_a(t); }, 0.0, 1.0, 2048);
}

// chi(y) = integral_0^y (h/a - 1) dt + C with zero mean
double layered_chi(double y, double h) {
    auto integrand = [h](double t) { return h / layered_a(t) - 1.0; };
    double val = simpson(integrand, 0.0, y, 512);
    // zero-mean constant: C = -int_0^1 int_0^s integrand
    static double mean_part = [] {
        double acc = 0;
        const int n = 128;
        for (int i = 0; i < n; ++i) {
            double s = (i + 0.5) / n;
            acc += simpson([](double t) { return layered_harmonic_mean() / layered_a(t) - 1.0; },
                           0.0, s, 256);
        }
        return acc / n;
    }();
    return val - mean_part;
}

} // namespace

TEST_CASE("constant coefficients: zero correctors, exact tensor") {
    auto co = PeriodicCoefficients::identity(32, 2.0);
    auto chi = solve_corrector(co);
    CHECK(field_max_abs(chi.chi[0]) < 1e-12);
    CHECK(field_max_abs(chi.chi[1]) < 1e-12);
    auto a0 = homogenized_tensor(co, chi);
    CHECK(a0[0] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(a0[3] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(std::abs(a0[1]) < 1e-13);

    auto gamma = solve_gamma(co, chi, a0);
    for (int k = 0; k < 4; ++k) {
        CHECK(field_max_abs(gamma.gamma[k]) < 1e-12); // constant B, zero source
        double bmean = grid_mean(gamma.b[k]);
        CHECK(gamma.b[k][0] == doctest::Approx(bmean).epsilon(1e-12));
    }
    auto flux = flux_potential(co, chi, a0);
    for (int k = 0; k < 4; ++k) CHECK(field_max_abs(flux.phi[k]) < 1e-12);
    CHECK(field_max_abs(flux.psi12[0]) < 1e-10);
}

TEST_CASE("layered medium: closed-form corrector and tensor") {
    const int n = 128;
    auto co = PeriodicCoefficients::layered_cosine(n);
    auto chi = solve_corrector(co);

    // chi^2 vanishes; chi^1 depends on y1 only
    CHECK(field_max_abs(chi.chi[1]) < 1e-10);
    for (int i = 0; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            CHECK(std::abs(chi.chi[0][size_t(i) * n + j] - chi.chi[0][size_t(i) * n]) < 1e-10);
        }
    }

    const double h = layered_harmonic_mean();
    CHECK(h == doctest::Approx(kSqrt3).epsilon(1e-10)); // the quadrature oracle itself
    for (int i = 0; i < n; i += 7) {
        double y = double(i) / n;
        CHECK(chi.chi[0][size_t(i) * n] == doctest::Approx(layered_chi(y, h)).epsilon(1e-7));
    }

    auto a0 = homogenized_tensor(co, chi);
    CHECK(a0[0] == doctest::Approx(kSqrt3).epsilon(1e-9));
    CHECK(a0[3] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(a0[1]) < 1e-10);
    CHECK(std::abs(a0[2]) < 1e-10);

    // zero-mean invariants
    CHECK(std::abs(grid_mean(chi.chi[0])) < 1e-10);
    CHECK(std::abs(grid_mean(chi.chi[1])) < 1e-10);
}

TEST_CASE("layered medium: gamma against the 1D two-point oracle") {
    const int n = 128;
    auto co = PeriodicCoefficients::layered_cosine(n);
    auto chi = solve_corrector(co);
    auto a0 = homogenized_tensor(co, chi);
    auto gam = solve_gamma(co, chi, a0);

    for (int k = 0; k < 4; ++k) CHECK(std::abs(grid_mean(gam.gamma[k])) < 1e-10);

    // Gamma^{11}: -(a Gamma')' = (a chi)' so Gamma' = -chi (zero-mean constants)
    const double h = layered_harmonic_mean();
    auto gamma11_oracle = [&](double y) {
        auto integrand = [&](double t) { return -layered_chi(t, h); };
        double val = simpson(integrand, 0.0, y, 256);
        static double mean_part = [&] {
            double acc = 0;
            const int m = 128;
            for (int i = 0; i < m; ++i) {
                acc += simpson(integrand, 0.0, (i + 0.5) / m, 256);
            }
            return acc / m;
        }();
        return val - mean_part;
    };
    for (int i = 0; i < n; i += 11) {
        double y = double(i) / n;
        CHECK(gam.gamma[0][size_t(i) * n] == doctest::Approx(gamma11_oracle(y)).epsilon(5e-6));
    }
    // off-diagonal blocks vanish in a layered medium
    CHECK(field_max_abs(gam.gamma[1]) < 1e-9);
    CHECK(field_max_abs(gam.gamma[2]) < 1e-9);
}

TEST_CASE("layered medium: flux constancy and the potential identity") {
    const int n = 128;
    auto co = PeriodicCoefficients::layered_cosine(n);
    auto chi = solve_corrector(co);
    auto a0 = homogenized_tensor(co, chi);
    auto flux = flux_potential(co, chi, a0);

    // Phi_11 = a (1 + chi') - sqrt3 vanishes pointwise (1D flux constancy)
    CHECK(field_max_abs(flux.phi[0]) < 1e-8);
    CHECK(flux.identity_residual <= 1e-8);
    CHECK(flux.divergence_residual <= 1e-7);
}

TEST_CASE("smooth checkerboard: residual, refinement, bounds") {
    SolveOptions opts;
    auto co64 = PeriodicCoefficients::trig_checkerboard(64, 0.8);
    auto chi64 = solve_corrector(co64, opts);
    CHECK(chi64.residual[0] <= 1e-8 * chi64.residual_scale[0]);
    CHECK(std::abs(grid_mean(chi64.chi[0])) < 1e-10);

    // spectral convergence of A0 for a slowly decaying analytic coefficient
    auto a0_at = [&](int n) {
        auto co = PeriodicCoefficients::sample(n, [](double y1, double) {
            double v = 2.0 + 1.8 * std::cos(kTwoPi * y1);
            return std::array<double, 4>{v, 0, 0, v};
        });
        auto chi = solve_corrector(co);
        return homogenized_tensor(co, chi);
    };
    auto ref = a0_at(256);
    double e16 = std::abs(a0_at(16)[0] - ref[0]);
    double e32 = std::abs(a0_at(32)[0] - ref[0]);
    double e64 = std::abs(a0_at(64)[0] - ref[0]);
    CHECK(e16 > 0);
    // halving the mesh beats any fixed power: ratios far above 2^4
    CHECK(e16 / std::max(e32, 1e-16) > 16.0);
    CHECK(e32 / std::max(e64, 1e-15) > 16.0);
    // layered closed form: harmonic mean of 2 + 1.8 cos is sqrt(4 - 1.8^2)
    CHECK(ref[0] == doctest::Approx(std::sqrt(4.0 - 1.8 * 1.8)).epsilon(1e-9));

    // Voigt-Reuss bounds for the isotropic checkerboard
    auto chi_cb = solve_corrector(co64);
    auto a0_cb = homogenized_tensor(co64, chi_cb);
    double tr = a0_cb[0] + a0_cb[3];
    double det = a0_cb[0] * a0_cb[3] - a0_cb[1] * a0_cb[2];
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    double lo = tr / 2.0 - disc, hi = tr / 2.0 + disc;
    double harm = 1.0 / grid_mean([&] {
        std::vector<double> inv(co64.a[0].size());
        for (size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / co64.a[0][i];
        return inv;
    }());
    double arith = grid_mean(co64.a[0]);
    CHECK(lo >= harm - 1e-8);
    CHECK(hi <= arith + 1e-8);
}

TEST_CASE("energy identity: A0 diagonal equals the corrector energy") {
    const int n = 64;
    auto co = PeriodicCoefficients::trig_checkerboard(n, 0.7);
    auto chi = solve_corrector(co);
    auto a0 = homogenized_tensor(co, chi);
    for (int be = 0; be < 2; ++be) {
        auto g1 = spectral_derivative(n, chi.chi[be], 0);
        auto g2 = spectral_derivative(n, chi.chi[be], 1);
        double acc = 0;
        for (size_t i = 0; i < g1.size(); ++i) {
            double e1 = (be == 0 ? 1.0 : 0.0) + g1[i];
            double e2 = (be == 1 ? 1.0 : 0.0) + g2[i];
            acc += co.a[0][i] * e1 * e1 + (co.a[1][i] + co.a[2][i]) * e1 * e2 +
                   co.a[3][i] * e2 * e2;
        }
        acc /= double(g1.size());
        CHECK(acc == doctest::Approx(a0[be * 2 + be]).epsilon(1e-8));
    }
}

TEST_CASE("transposed coefficients give the transposed tensor") {
    const int n = 64;
    auto fn = [](double y1, double y2) {
        return std::array<double, 4>{2.0 + std::cos(kTwoPi * y1),
                                     0.3 * std::sin(kTwoPi * y2),
                                     0.1 * std::cos(kTwoPi * (y1 + y2)),
                                     2.0 + 0.5 * std::sin(kTwoPi * y2)};
    };
    auto fn_t = [&](double y1, double y2) {
        auto m = fn(y1, y2);
        return std::array<double, 4>{m[0], m[2], m[1], m[3]};
    };
    auto co = PeriodicCoefficients::sample(n, fn);
    auto co_t = PeriodicCoefficients::sample(n, fn_t);
    CHECK_FALSE(co.symmetric);
    auto a0 = homogenized_tensor(co, solve_corrector(co));
    auto a0_t = homogenized_tensor(co_t, solve_corrector(co_t));
    CHECK(a0[0] == doctest::Approx(a0_t[0]).epsilon(1e-8));
    CHECK(a0[3] == doctest::Approx(a0_t[3]).epsilon(1e-8));
    CHECK(a0[1] == doctest::Approx(a0_t[2]).epsilon(1e-8));
    CHECK(a0[2] == doctest::Approx(a0_t[1]).epsilon(1e-8));
}

TEST_CASE("error paths") {
    auto co = PeriodicCoefficients::layered_cosine(32);
    SolveOptions strangled;
    strangled.max_iterations = 1;
    CHECK_THROWS_AS(solve_corrector(co, strangled), ConvergenceError);

    CHECK_THROWS_AS(PeriodicCoefficients::identity(24), InvalidInput); // not a power of two
    auto tiny = PeriodicCoefficients::identity(8);
    CHECK_THROWS_AS(solve_corrector(tiny), InvalidInput); // below the minimum grid

    // non-elliptic matrix is rejected at sampling
    CHECK_THROWS_AS(PeriodicCoefficients::sample(
                        16,
                        [](double, double) {
                            return std::array<double, 4>{1.0, 3.0, 3.0, 1.0};
                        }),
                    InvalidInput);
}
