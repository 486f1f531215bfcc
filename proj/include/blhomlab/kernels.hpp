#pragma once

#include "blhomlab/blsolver.hpp"
#include "blhomlab/geometry.hpp"

#include <array>
#include <vector>

namespace blhomlab::kernels {

using Vec2 = std::array<double, 2>;

/// Half-plane Poisson kernel for the Laplacian, P(y,yt) = (1/pi)(y.n - a)/|y-yt|^2.
/// The closed form is validated by this module's own mass/harmonicity checks,
/// not assumed. Requires y strictly inside and yt on the boundary (1e-10).
double poisson_kernel(const geometry::NormalFrame& frame, Vec2 y, Vec2 ytil);

/// grad_y of the kernel (for the gradient-bound check).
Vec2 poisson_kernel_gradient(const geometry::NormalFrame& frame, Vec2 y, Vec2 ytil);

/// Image-method Green function of the half-plane Laplacian,
/// G(y,yt) = (1/4 pi) log(|y-yt*|^2/|y-yt|^2).
double green_function(const geometry::NormalFrame& frame, Vec2 y, Vec2 ytil);

/// Boundary point a*n + s*tangent.
Vec2 boundary_point(const geometry::NormalFrame& frame, double s);

struct PoissonQuadrature {
    double half_width = 100.0; ///< integrate s in [-W, W]
    int nodes = 100000;        ///< lower bound on quadrature nodes
};

struct PoissonSolveResult {
    std::vector<double> values;
    double mass_defect = 0;   ///< max over points of |1 - integral of P|
    bool width_warning = false; ///< W < 50 * max height
};

/// w(y) = int P(y, yt) v0(yt) d yt over the boundary line, composite
/// Gauss-Legendre with panel width <= min(1, height)/4.
PoissonSolveResult poisson_solve(const blsolver::BoundaryFn& v0,
                                 const geometry::NormalFrame& frame,
                                 const std::vector<Vec2>& points,
                                 const PoissonQuadrature& quad = {});

/// int over the whole boundary of P(y, .), by the exact tangent substitution
/// (the kernel itself is evaluated through its closed form).
double boundary_mass(const geometry::NormalFrame& frame, Vec2 y);

struct KernelBoundReport {
    double poisson_constant = 0;  ///< sup P |y-yt|^2 / (y.n - a); 1/pi for the Laplacian
    double gradient_constant = 0; ///< sup |grad P| min(|y-yt|^2, |y-yt|^3/(y.n - a))
    double green_constant = 0;    ///< sup G |y-yt|^2 / ((y.n-a)(yt.n-a))
    bool nonnegative = true;
    int samples = 0;
};

/// Empirical constants over a deterministic sample set of heights/offsets.
KernelBoundReport kernel_bound_check(const geometry::NormalFrame& frame,
                                     int heights = 8, int offsets = 81);

/// 5-point discrete Laplacian of y -> P(y, yt) at interior samples.
double harmonicity_residual(const geometry::NormalFrame& frame, double step = 1e-3);

/// Smooth compactly supported source exp(-r^2/(rho^2 - r^2)) for |x-c| < rho.
struct BumpSource {
    Vec2 center{0.0, 2.0};
    double radius = 0.75;
    double amplitude = 1.0;
    double operator()(double x1, double x2) const;
};

struct GreensIdentityReport {
    double max_boundary_abs = 0;    ///< sup |u| over boundary samples
    double pde_residual = 0;        ///< max |(-Lap u) - f| at interior samples
    double green_bound_constant = 0;///< sampled sup of G r^2/(h_y h_yt)
};

/// u(y) = int G(y,x) f(x) dx by singularity-graded polar quadrature; verifies
/// the boundary condition and -Lap u = f by finite differences.
GreensIdentityReport greens_identity_check(const geometry::NormalFrame& frame,
                                           const BumpSource& f);

/// Newtonian potential -(1/2 pi) int log|z-x| f(x) dx (exposed for tests).
double newtonian_potential(const BumpSource& f, Vec2 z);

} // namespace blhomlab::kernels
