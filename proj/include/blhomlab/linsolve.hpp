#pragma once

#include "blhomlab/errors.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace blhomlab {

using VecF = std::vector<double>;
using LinOp = std::function<void(const VecF&, VecF&)>; ///< y = A x or y = M^{-1} x

inline double dot(const VecF& a, const VecF& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double a, const VecF& x, VecF& y) {
    for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

struct SolveStats {
    int iterations = 0;
    double residual = 0; ///< final |b - Ax|_2 / |b|_2
};

/// Preconditioned conjugate gradient, matrix-free. Solves A x = b in place.
/// `tol` is relative to |b|_2 (absolute when b vanishes).
inline SolveStats cg(const LinOp& A, const LinOp& prec, const VecF& b, VecF& x, double tol,
                     int max_iter, const std::string& what) {
    const size_t n = b.size();
    VecF r(n), z(n), p(n), Ap(n);
    A(x, Ap);
    for (size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    double bnorm = std::sqrt(dot(b, b));
    double scale = bnorm > 0 ? bnorm : 1.0;
    prec(r, z);
    p = z;
    double rz = dot(r, z);
    SolveStats st;
    double rn = std::sqrt(dot(r, r));
    for (int it = 0; it < max_iter; ++it) {
        if (rn <= tol * scale) {
            st.iterations = it;
            st.residual = rn / scale;
            return st;
        }
        A(p, Ap);
        double pAp = dot(p, Ap);
        if (!(pAp > 0)) break; // operator lost definiteness (roundoff)
        double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        prec(r, z);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rn = std::sqrt(dot(r, r));
        st.iterations = it + 1;
    }
    if (rn <= tol * scale) {
        st.residual = rn / scale;
        return st;
    }
    throw ConvergenceError(what + ": conjugate gradient did not converge", rn / scale,
                           st.iterations);
}

/// Preconditioned BiCGStab for the mildly nonsymmetric cases (transposed
/// coefficient checks). Same contract as cg().
inline SolveStats bicgstab(const LinOp& A, const LinOp& prec, const VecF& b, VecF& x, double tol,
                           int max_iter, const std::string& what) {
    const size_t n = b.size();
    VecF r(n), r0(n), p(n), v(n), s(n), t(n), ph(n), sh(n);
    A(x, v);
    for (size_t i = 0; i < n; ++i) r[i] = b[i] - v[i];
    r0 = r;
    double bnorm = std::sqrt(dot(b, b));
    double scale = bnorm > 0 ? bnorm : 1.0;
    double rho = 1, alpha = 1, omega = 1;
    std::fill(v.begin(), v.end(), 0.0);
    std::fill(p.begin(), p.end(), 0.0);
    SolveStats st;
    double rn = std::sqrt(dot(r, r));
    for (int it = 0; it < max_iter; ++it) {
        if (rn <= tol * scale) {
            st.iterations = it;
            st.residual = rn / scale;
            return st;
        }
        double rho_new = dot(r0, r);
        if (rho_new == 0) break;
        double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        prec(p, ph);
        A(ph, v);
        alpha = rho / dot(r0, v);
        for (size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        prec(s, sh);
        A(sh, t);
        double tt = dot(t, t);
        omega = tt > 0 ? dot(t, s) / tt : 0.0;
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        rn = std::sqrt(dot(r, r));
        st.iterations = it + 1;
        if (omega == 0) break;
    }
    if (rn <= tol * scale) {
        st.residual = rn / scale;
        return st;
    }
    throw ConvergenceError(what + ": BiCGStab did not converge", rn / scale, st.iterations);
}

} // namespace blhomlab
