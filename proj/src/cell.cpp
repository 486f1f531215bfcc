#include "blhomlab/cell.hpp"

#include "blhomlab/errors.hpp"
#include "blhomlab/fft.hpp"
#include "blhomlab/linsolve.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace blhomlab::cell {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

size_t spec_size(int n) { return static_cast<size_t>(n) * (n / 2 + 1); }

} // namespace

double grid_mean(const std::vector<double>& f) {
    double s = 0;
    for (double v : f) s += v;
    return s / static_cast<double>(f.size());
}

std::vector<double> spectral_derivative(int grid, const std::vector<double>& f, int axis) {
    std::vector<std::complex<double>> sp(spec_size(grid));
    fft::forward2(grid, grid, f.data(), sp.data());
    for (int a = 0; a < grid; ++a) {
        int k1 = fft::freq(a, grid);
        for (int b = 0; b <= grid / 2; ++b) {
            int k = axis == 0 ? k1 : b;
            // odd multiplier: drop the unmatched Nyquist mode
            if ((axis == 0 && a == grid / 2) || (axis == 1 && b == grid / 2)) k = 0;
            sp[a * (grid / 2 + 1) + b] *= std::complex<double>(0.0, kTwoPi * k);
        }
    }
    std::vector<double> out(f.size());
    fft::inverse2(grid, grid, sp.data(), out.data());
    return out;
}

std::vector<double> poisson_zero_mean(int grid, const std::vector<double>& f) {
    std::vector<std::complex<double>> sp(spec_size(grid));
    fft::forward2(grid, grid, f.data(), sp.data());
    for (int a = 0; a < grid; ++a) {
        int k1 = fft::freq(a, grid);
        for (int b = 0; b <= grid / 2; ++b) {
            double k2 = double(k1) * k1 + double(b) * b;
            auto& c = sp[a * (grid / 2 + 1) + b];
            if (k2 == 0)
                c = 0;
            else
                c /= -kTwoPi * kTwoPi * k2;
        }
    }
    std::vector<double> out(f.size());
    fft::inverse2(grid, grid, sp.data(), out.data());
    return out;
}

PeriodicCoefficients PeriodicCoefficients::sample(int grid, CoeffFn fn) {
    if (!power_of_two(grid))
        throw InvalidInput("PeriodicCoefficients: grid must be a power of two");
    PeriodicCoefficients c;
    c.grid = grid;
    c.fn = std::move(fn);
    for (auto& comp : c.a) comp.assign(static_cast<size_t>(grid) * grid, 0.0);
    double lam = std::numeric_limits<double>::infinity();
    double lam_inv = 0.0;
    bool sym = true;
    const double h = 1.0 / grid;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            auto m = c.fn(i * h, j * h);
            size_t idx = static_cast<size_t>(i) * grid + j;
            for (int k = 0; k < 4; ++k) c.a[k][idx] = m[k];
            if (std::abs(m[1] - m[2]) > 1e-14) sym = false;
            // eigenvalues of the symmetric part
            double s12 = 0.5 * (m[1] + m[2]);
            double tr = m[0] + m[3];
            double disc = std::sqrt(0.25 * (m[0] - m[3]) * (m[0] - m[3]) + s12 * s12);
            lam = std::min(lam, 0.5 * tr - disc);
            lam_inv = std::max(lam_inv, 0.5 * tr + disc);
        }
    }
    if (!(lam > 0))
        throw InvalidInput("PeriodicCoefficients: sampled matrix is not elliptic");
    c.lambda = std::min(lam, 1.0 / lam_inv);
    c.symmetric = sym;
    return c;
}

PeriodicCoefficients PeriodicCoefficients::identity(int grid, double scale) {
    return sample(grid, [scale](double, double) {
        return std::array<double, 4>{scale, 0.0, 0.0, scale};
    });
}

PeriodicCoefficients PeriodicCoefficients::layered_cosine(int grid) {
    return sample(grid, [](double y1, double) {
        double v = 2.0 + std::cos(kTwoPi * y1);
        return std::array<double, 4>{v, 0.0, 0.0, v};
    });
}

PeriodicCoefficients PeriodicCoefficients::trig_checkerboard(int grid, double amp) {
    return sample(grid, [amp](double y1, double y2) {
        double v = 2.0 + amp * std::cos(kTwoPi * y1) * std::cos(kTwoPi * y2);
        return std::array<double, 4>{v, 0.0, 0.0, v};
    });
}

namespace {

struct CellOperator {
    const PeriodicCoefficients& c;
    int n;

    void apply(const VecF& u, VecF& out) const {
        auto g1 = spectral_derivative(n, u, 0);
        auto g2 = spectral_derivative(n, u, 1);
        VecF q1(u.size()), q2(u.size());
        for (size_t i = 0; i < u.size(); ++i) {
            q1[i] = c.a[0][i] * g1[i] + c.a[1][i] * g2[i];
            q2[i] = c.a[2][i] * g1[i] + c.a[3][i] * g2[i];
        }
        auto d1 = spectral_derivative(n, q1, 0);
        auto d2 = spectral_derivative(n, q2, 1);
        for (size_t i = 0; i < u.size(); ++i) out[i] = -(d1[i] + d2[i]);
        double m = grid_mean(out);
        for (auto& v : out) v -= m;
    }
};

/// Inverse of -abar Laplacian on the zero-mean subspace.
struct LaplacePrec {
    int n;
    double abar;

    void apply(const VecF& r, VecF& out) const {
        std::vector<std::complex<double>> sp(spec_size(n));
        fft::forward2(n, n, r.data(), sp.data());
        for (int a = 0; a < n; ++a) {
            int k1 = fft::freq(a, n);
            for (int b = 0; b <= n / 2; ++b) {
                double k2 = double(k1) * k1 + double(b) * b;
                auto& cc = sp[a * (n / 2 + 1) + b];
                if (k2 == 0)
                    cc = 0;
                else
                    cc /= abar * kTwoPi * kTwoPi * k2;
            }
        }
        out.resize(r.size());
        fft::inverse2(n, n, sp.data(), out.data());
    }
};

/// Discrete H^-1 norm (Fourier) of a zero-mean field.
double hminus1_norm(int n, const VecF& r) {
    std::vector<std::complex<double>> sp(spec_size(n));
    fft::forward2(n, n, r.data(), sp.data());
    double s = 0;
    for (int a = 0; a < n; ++a) {
        int k1 = fft::freq(a, n);
        for (int b = 0; b <= n / 2; ++b) {
            double k2 = double(k1) * k1 + double(b) * b;
            if (k2 == 0) continue;
            double w = (b == 0 || b == n / 2) ? 1.0 : 2.0; // half-spectrum weights
            s += w * std::norm(sp[a * (n / 2 + 1) + b]) / (kTwoPi * kTwoPi * k2);
        }
    }
    return std::sqrt(s) / (double(n) * n);
}

double coeff_norm(const PeriodicCoefficients& c) {
    double s = 0;
    for (const auto& comp : c.a) {
        for (double v : comp) s += v * v;
    }
    return std::sqrt(s / double(c.a[0].size()));
}

/// Zero-mean solve of -div(A grad u) = rhs (rhs projected to zero mean).
VecF cell_solve(const PeriodicCoefficients& c, const VecF& rhs_in, const SolveOptions& opts,
                double& hres, const std::string& what) {
    const int n = c.grid;
    VecF rhs = rhs_in;
    double m = grid_mean(rhs);
    for (auto& v : rhs) v -= m;

    CellOperator op{c, n};
    double abar = 0.5 * (grid_mean(c.a[0]) + grid_mean(c.a[3]));
    LaplacePrec prec{n, abar};
    LinOp A = [&](const VecF& u, VecF& out) { op.apply(u, out); };
    LinOp M = [&](const VecF& r, VecF& out) { prec.apply(r, out); };

    VecF u(rhs.size(), 0.0);
    const double scale = coeff_norm(c);
    // |r|_{H^-1} <= |r|_{L^2} / (2 pi): an L^2 target of tol*|A| is enough
    double l2_target = opts.tolerance * scale * std::sqrt(double(rhs.size()));

    SolveStats st;
    if (c.symmetric)
        st = cg(A, M, rhs, u, l2_target / std::max(1e-300, std::sqrt(dot(rhs, rhs))),
                opts.max_iterations, what);
    else
        st = bicgstab(A, M, rhs, u, l2_target / std::max(1e-300, std::sqrt(dot(rhs, rhs))),
                      opts.max_iterations, what);
    (void)st;

    double mu = grid_mean(u);
    for (auto& v : u) v -= mu;

    VecF r(u.size());
    op.apply(u, r);
    for (size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
    hres = hminus1_norm(n, r);
    if (hres > opts.tolerance * std::max(scale, 1e-300))
        throw ConvergenceError(what + ": residual above tolerance", hres, opts.max_iterations);
    return u;
}

} // namespace

CorrectorSolution solve_corrector(const PeriodicCoefficients& coeffs, const SolveOptions& opts) {
    if (coeffs.grid < 16)
        throw InvalidInput("solve_corrector: grid must be at least 16 per axis");
    const int n = coeffs.grid;
    CorrectorSolution sol;
    sol.grid = n;
    const double scale = coeff_norm(coeffs);
    for (int beta = 0; beta < 2; ++beta) {
        // rhs^beta = d_alpha A^{alpha beta}
        auto d0 = spectral_derivative(n, coeffs.a[0 * 2 + beta], 0);
        auto d1 = spectral_derivative(n, coeffs.a[1 * 2 + beta], 1);
        VecF rhs(d0.size());
        for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = d0[i] + d1[i];
        double hres = 0;
        sol.chi[beta] = cell_solve(coeffs, rhs, opts, hres, "solve_corrector");
        sol.residual[beta] = hres;
        sol.residual_scale[beta] = scale;
    }
    return sol;
}

std::array<double, 4> homogenized_tensor(const PeriodicCoefficients& coeffs,
                                         const CorrectorSolution& chi) {
    const int n = coeffs.grid;
    std::array<double, 4> a0{};
    std::array<std::vector<double>, 2> grad[2]; // grad[beta] = (d1 chi^b, d2 chi^b)
    for (int b = 0; b < 2; ++b) {
        grad[b][0] = spectral_derivative(n, chi.chi[b], 0);
        grad[b][1] = spectral_derivative(n, chi.chi[b], 1);
    }
    for (int al = 0; al < 2; ++al) {
        for (int be = 0; be < 2; ++be) {
            VecF integrand(coeffs.a[0].size());
            for (size_t i = 0; i < integrand.size(); ++i) {
                double v = coeffs.a[al * 2 + be][i];
                for (int g = 0; g < 2; ++g) v += coeffs.a[al * 2 + g][i] * grad[be][g][i];
                integrand[i] = v;
            }
            a0[al * 2 + be] = grid_mean(integrand);
        }
    }
    return a0;
}

GammaSolution solve_gamma(const PeriodicCoefficients& coeffs, const CorrectorSolution& chi,
                          const std::array<double, 4>& /*a0*/, const SolveOptions& opts) {
    const int n = coeffs.grid;
    GammaSolution out;
    std::array<std::vector<double>, 2> grad[2];
    for (int b = 0; b < 2; ++b) {
        grad[b][0] = spectral_derivative(n, chi.chi[b], 0);
        grad[b][1] = spectral_derivative(n, chi.chi[b], 1);
    }
    for (int al = 0; al < 2; ++al) {
        for (int be = 0; be < 2; ++be) {
            VecF bfield(coeffs.a[0].size());
            // A^{ab} + A^{ag} d_g chi^b
            for (size_t i = 0; i < bfield.size(); ++i) {
                double v = coeffs.a[al * 2 + be][i];
                for (int g = 0; g < 2; ++g) v += coeffs.a[al * 2 + g][i] * grad[be][g][i];
                bfield[i] = v;
            }
            // + d_g (A^{g a} chi^b)   (note the transposed indices)
            for (int g = 0; g < 2; ++g) {
                VecF prod(bfield.size());
                for (size_t i = 0; i < prod.size(); ++i)
                    prod[i] = coeffs.a[g * 2 + al][i] * chi.chi[be][i];
                auto dg = spectral_derivative(n, prod, g);
                for (size_t i = 0; i < bfield.size(); ++i) bfield[i] += dg[i];
            }
            out.b[al * 2 + be] = bfield;
            double hres = 0;
            out.gamma[al * 2 + be] = cell_solve(coeffs, bfield, opts, hres, "solve_gamma");
            out.residual[al * 2 + be] = hres;
        }
    }
    return out;
}

FluxPotential flux_potential(const PeriodicCoefficients& coeffs, const CorrectorSolution& chi,
                             const std::array<double, 4>& a0) {
    const int n = coeffs.grid;
    FluxPotential out;
    std::array<std::vector<double>, 2> grad[2];
    for (int b = 0; b < 2; ++b) {
        grad[b][0] = spectral_derivative(n, chi.chi[b], 0);
        grad[b][1] = spectral_derivative(n, chi.chi[b], 1);
    }
    double phinorm = 0;
    for (int al = 0; al < 2; ++al) {
        for (int be = 0; be < 2; ++be) {
            VecF f(coeffs.a[0].size());
            for (size_t i = 0; i < f.size(); ++i) {
                double v = coeffs.a[al * 2 + be][i];
                for (int g = 0; g < 2; ++g) v += coeffs.a[al * 2 + g][i] * grad[be][g][i];
                f[i] = v - a0[al * 2 + be];
            }
            out.phi[al * 2 + be] = std::move(f);
            phinorm += dot(out.phi[al * 2 + be], out.phi[al * 2 + be]);
        }
    }
    phinorm = std::sqrt(phinorm / double(out.phi[0].size()));

    // column divergence d_a Phi^{ab} must vanish (it is the cell residual)
    double dres = 0;
    for (int be = 0; be < 2; ++be) {
        auto d0 = spectral_derivative(n, out.phi[0 * 2 + be], 0);
        auto d1 = spectral_derivative(n, out.phi[1 * 2 + be], 1);
        VecF div(d0.size());
        for (size_t i = 0; i < div.size(); ++i) div[i] = d0[i] + d1[i];
        dres = std::max(dres, hminus1_norm(n, div));
    }
    out.divergence_residual = dres;
    double tol = 10.0 * std::max({chi.residual[0], chi.residual[1], 1e-12});
    if (dres > tol * std::max(1.0, phinorm))
        throw ConvergenceError("flux_potential: Phi is not divergence-free; corrector not "
                               "converged",
                               dres, 0);

    // Psi^{g a b} = d_g f^{a b} - d_a f^{g b} with Laplace f^{ab} = Phi^{ab}
    std::array<VecF, 4> f;
    for (int k = 0; k < 4; ++k) f[k] = poisson_zero_mean(n, out.phi[k]);
    double idres = 0;
    for (int be = 0; be < 2; ++be) {
        auto d1f2 = spectral_derivative(n, f[1 * 2 + be], 0); // d_1 f^{2 b}
        auto d2f1 = spectral_derivative(n, f[0 * 2 + be], 1); // d_2 f^{1 b}
        VecF psi(d1f2.size());
        for (size_t i = 0; i < psi.size(); ++i) psi[i] = d1f2[i] - d2f1[i];
        out.psi12[be] = std::move(psi);

        // check d_g Psi^{g a b} = Phi^{a b}: the two rows are (-d2 Psi12, d1 Psi12)
        auto r1 = spectral_derivative(n, out.psi12[be], 1);
        auto r2 = spectral_derivative(n, out.psi12[be], 0);
        double e = 0;
        for (size_t i = 0; i < r1.size(); ++i) {
            double e1 = -r1[i] - out.phi[0 * 2 + be][i];
            double e2 = r2[i] - out.phi[1 * 2 + be][i];
            e += e1 * e1 + e2 * e2;
        }
        idres = std::max(idres, std::sqrt(e / double(r1.size())));
    }
    out.identity_residual = phinorm > 0 ? idres / phinorm : idres;
    return out;
}

CorrectorSet solve_all(const PeriodicCoefficients& coeffs, const SolveOptions& opts) {
    CorrectorSet set;
    set.grid = coeffs.grid;
    set.chi = solve_corrector(coeffs, opts);
    set.a0 = homogenized_tensor(coeffs, set.chi);
    set.gamma = solve_gamma(coeffs, set.chi, set.a0, opts);
    set.flux = flux_potential(coeffs, set.chi, set.a0);
    return set;
}

} // namespace blhomlab::cell
