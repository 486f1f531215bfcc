#pragma once

#include "blhomlab/cell.hpp"
#include "blhomlab/geometry.hpp"

#include <array>
#include <complex>
#include <functional>
#include <map>
#include <vector>

namespace blhomlab::blsolver {

/// Finitely supported Fourier data xi in Z^2 -> v0_hat(xi), kept Hermitian
/// (v0_hat(-xi) = conj v0_hat(xi)) so the function it represents is real.
class FourierBoundaryData {
public:
    using Key = std::array<int, 2>;

    /// Sets v0_hat(xi) and the conjugate coefficient at -xi.
    void set_mode(Key xi, std::complex<double> c);
    void add_cosine(Key xi, double amplitude); ///< amplitude * cos(2 pi xi . theta)
    void add_sine(Key xi, double amplitude);   ///< amplitude * sin(2 pi xi . theta)
    void set_constant(double c);

    std::complex<double> coeff(Key xi) const;
    const std::map<Key, std::complex<double>>& modes() const { return modes_; }
    double eval(double y1, double y2) const; ///< the 1-periodic function on R^2
    int max_abs_xi() const;
    bool empty() const { return modes_.empty(); }

    /// Data shifted by a*n: v0(. + a n); multiplies each mode by a unit phase.
    FourierBoundaryData shifted(const geometry::NormalFrame& frame, double a) const;

private:
    std::map<Key, std::complex<double>> modes_;
};

struct SeriesMode {
    std::array<int, 2> xi;
    std::complex<double> coeff;
    double rate; ///< 2 pi |N^T xi|
};

/// Exact mode/decay-rate representation of the boundary-layer field for the
/// half-plane Laplacian: V(theta,t) = sum v0_hat(xi) e^{-2 pi |N^T xi| t}
/// e^{2 i pi xi.theta}.
struct SeriesField {
    geometry::NormalFrame frame;
    std::vector<SeriesMode> modes; ///< ordered by lattice key

    double tail() const; ///< v0_hat(0)
    double eval_theta(double th1, double th2, double t) const;
    /// evaluation along the physical boundary coordinate: theta = N z1
    double eval_tangential(double z1, double t) const;
    /// || V(.,t) - v0_hat(0) ||_{L^2(T^2)} by Parseval
    double l2_deviation(double t) const;
    double min_positive_rate() const;
};

SeriesField solve_series_laplacian(const FourierBoundaryData& v0,
                                   const geometry::NormalFrame& frame);

/// Solved corrector on a grid. Strip form (tangential_dims = 1) lives on one
/// tangential period x [a, a+T] in rotated coordinates; torus form
/// (tangential_dims = 2) lives on T^2 x [0, T].
struct GridField {
    geometry::NormalFrame frame;
    int tangential_dims = 1;
    int n1 = 0, n2 = 1;       ///< tangential nodes (n2 unused for strips)
    double length1 = 1.0;     ///< tangential period (strip) or 1 (torus)
    int nt = 0;               ///< normal intervals; nt+1 node slices
    double t0 = 0.0, T = 0.0; ///< normal range [t0, t0+T]
    double iota = 0.0;        ///< regularization used (0 for the strip solver)
    std::vector<double> v;    ///< slice-major: v[j*(n1*n2) + i1*n2 + i2]

    double residual = 0.0;    ///< relative algebraic residual of the solve
    int iterations = 0;

    double at(int j, int i1, int i2 = 0) const {
        return v[static_cast<size_t>(j) * n1 * n2 + static_cast<size_t>(i1) * n2 + i2];
    }
    /// bilinear interpolation, periodic tangentially; throws std::out_of_range
    /// when t is outside [t0, t0+T]
    double eval(double z1, double z2_or_t) const;           // strip form
    double eval_theta(double th1, double th2, double t) const; // torus form

    double min_value() const;
    double max_value() const;
    /// sup-norm of the discrete gradient over the slab [ta, tb]
    double grad_sup_norm(double ta, double tb) const;
};

struct IterOptions {
    double tolerance = 1e-7;
    int max_iterations = 50000;
};

/// Point evaluator for Dirichlet data on the physical space (1-periodic).
using BoundaryFn = std::function<double(double, double)>;

/// Finite-difference solve of -div B(Mz) grad v = 0 on (one tangential
/// period) x [a, a+T] for a rational direction: Dirichlet v = v0(Mz) on the
/// bottom, zero conormal flux on the truncation top.
GridField solve_rational_strip(const cell::PeriodicCoefficients& coeffs, const BoundaryFn& v0,
                               const geometry::NormalFrame& frame, double T, int n_tangential,
                               int n_normal, const IterOptions& opts = {});

/// Regularized degenerate solve of
///   -(N^T grad_theta, d_t) . B(theta,t) (N^T grad_theta, d_t) V - iota Lap V = 0
/// on T^2 x [0, T], Dirichlet V = V0 at t=0, natural (Neumann) top. Fourier
/// differentiation in theta, second-order differences in t. iota must be
/// positive: the unregularized operator is not elliptic.
GridField solve_quasiperiodic_regularized(const cell::PeriodicCoefficients& coeffs,
                                          const FourierBoundaryData& V0,
                                          const geometry::NormalFrame& frame, double iota,
                                          double T, int n_theta, int n_normal,
                                          const IterOptions& opts = {});

/// K(T) = int_{T^d} int_T^inf |N^T grad_theta V|^2 + |d_t V|^2 : exact mode
/// sum for series fields.
double st_venant_energy(const SeriesField& field, double T);

struct StVenantEstimate {
    double value = 0;            ///< quadrature up to the truncation height
    double remainder_bound = 0;  ///< estimated tail beyond the grid
};
StVenantEstimate st_venant_energy(const GridField& field, double T);

/// Source evaluator on the physical square.
using SourceFn = std::function<double(double, double)>;

struct RectSolution {
    int n = 0;       ///< nodes per axis (including boundary)
    double length = 0;
    double eps = 0;
    std::vector<double> u_eps; ///< oscillating solve, row-major x1-major
    std::vector<double> u_hom; ///< homogenized solve on the same grid
    std::array<double, 4> a0{};
    double residual = 0;
};

/// Homogeneous-Dirichlet solves of -div A(x/eps) grad u = f and of the
/// homogenized operator on [0,L]^2. Refuses grids with fewer than 8 cells per
/// eps-period.
RectSolution dirichlet_rect_solver(const cell::PeriodicCoefficients& coeffs, double eps,
                                   const SourceFn& f, double length, int n,
                                   const IterOptions& opts = {},
                                   const std::array<double, 4>* a0 = nullptr);

struct SweepRow {
    double eps;
    double interior_linf; ///< max |u_eps - u_hom| outside a 2*eps collar
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double slope = 0;        ///< log-log least-squares slope
    bool degenerate = false; ///< errors at discretization level; fit meaningless
};

SweepReport homogenization_error_sweep(const cell::PeriodicCoefficients& coeffs,
                                       const SourceFn& f, const std::vector<double>& eps_list,
                                       double length, int n, const IterOptions& opts = {});

} // namespace blhomlab::blsolver
