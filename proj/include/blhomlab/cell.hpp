#pragma once

#include <array>
#include <functional>
#include <vector>

namespace blhomlab::cell {

/// 2x2 coefficient matrix at a point, row-major: {A11, A12, A21, A22}.
using CoeffFn = std::function<std::array<double, 4>(double, double)>;

/// 1-periodic coefficient matrix A(y) on the unit torus, held both as the
/// defining callable (solvers rotate and resample it off-grid) and as nodal
/// samples on a power-of-two collocation grid.
struct PeriodicCoefficients {
    int grid = 0;
    std::array<std::vector<double>, 4> a; ///< a[alpha*2+beta][i1*grid+i2]
    CoeffFn fn;
    double lambda = 0.0;   ///< sampled ellipticity constant
    bool symmetric = true; ///< A12 == A21 at every node

    static PeriodicCoefficients sample(int grid, CoeffFn fn);
    static PeriodicCoefficients identity(int grid, double scale = 1.0);
    /// a(y1) I with a(y1) = 2 + cos(2 pi y1)
    static PeriodicCoefficients layered_cosine(int grid);
    /// smooth non-layered test medium 2 + amp (cos(2 pi y1) cos(2 pi y2)) I
    static PeriodicCoefficients trig_checkerboard(int grid, double amp = 0.8);

    std::array<double, 4> at(double y1, double y2) const { return fn(y1, y2); }
};

struct SolveOptions {
    double tolerance = 1e-8; ///< discrete residual target (H^-1 via Fourier)
    int max_iterations = 10000;
};

struct CorrectorSolution {
    int grid = 0;
    std::array<std::vector<double>, 2> chi; ///< zero-mean chi^beta
    std::array<double, 2> residual{};       ///< H^-1 residual per beta
    std::array<double, 2> residual_scale{}; ///< |A| used for the tolerance
};

/// Solve the periodic cell problems -div(A grad chi^beta) = d_alpha A^{alpha beta}
/// with zero mean, by preconditioned Krylov iteration in Fourier space.
CorrectorSolution solve_corrector(const PeriodicCoefficients& coeffs,
                                  const SolveOptions& opts = {});

/// A0^{alpha beta} = mean(A^{alpha beta}) + mean(A^{alpha gamma} d_gamma chi^beta),
/// spectral quadrature (nodal mean).
std::array<double, 4> homogenized_tensor(const PeriodicCoefficients& coeffs,
                                         const CorrectorSolution& chi);

struct GammaSolution {
    std::array<std::vector<double>, 4> gamma;  ///< Gamma^{alpha beta}, zero mean
    std::array<std::vector<double>, 4> b;      ///< B^{alpha beta}(y)
    std::array<double, 4> residual{};
};

/// Second-order cell problems: B^{ab} = A^{ab} + A^{ag} d_g chi^b + d_g(A^{ga} chi^b),
/// -div(A grad Gamma^{ab}) = B^{ab} - mean(B^{ab}).
GammaSolution solve_gamma(const PeriodicCoefficients& coeffs, const CorrectorSolution& chi,
                          const std::array<double, 4>& a0, const SolveOptions& opts = {});

struct FluxPotential {
    std::array<std::vector<double>, 4> phi;  ///< Phi^{ab} = A(I + grad chi) - A0
    std::array<std::vector<double>, 2> psi12;///< Psi^{12 b}; Psi^{21 b} = -Psi^{12 b}
    double divergence_residual = 0;          ///< |div Phi| (must be at solver level)
    double identity_residual = 0;            ///< |div Psi - Phi| / |Phi|
};

/// Zero-mean flux field Phi and its antisymmetric potential Psi with
/// div Psi = Phi, built from componentwise Poisson solves in Fourier space.
/// The normalization of Psi is one representative of the (non-unique)
/// potential. Throws when Phi fails to be divergence-free at solver tolerance
/// (a sign that chi did not converge).
FluxPotential flux_potential(const PeriodicCoefficients& coeffs, const CorrectorSolution& chi,
                             const std::array<double, 4>& a0);

struct CorrectorSet {
    int grid = 0;
    CorrectorSolution chi;
    std::array<double, 4> a0{};
    GammaSolution gamma;
    FluxPotential flux;
};

/// Convenience: chi, A0, Gamma/B, Phi/Psi in one pass.
CorrectorSet solve_all(const PeriodicCoefficients& coeffs, const SolveOptions& opts = {});

// Spectral helpers shared with the tests (exact for trigonometric grids).
double grid_mean(const std::vector<double>& f);
std::vector<double> spectral_derivative(int grid, const std::vector<double>& f, int axis);
std::vector<double> poisson_zero_mean(int grid, const std::vector<double>& f);

} // namespace blhomlab::cell
