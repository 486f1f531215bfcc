#pragma once

#include <cmath>

namespace blhomlab {

/// Double-double value (~32 significant digits). Used for the Diophantine
/// quantities |N^T xi|, where cancellation between O(|xi|) terms leaves a
/// signal that can sit near 1e-12 at the radii we scan.
struct dd {
    double hi = 0.0;
    double lo = 0.0;

    constexpr dd() = default;
    constexpr dd(double h) : hi(h), lo(0.0) {}
    constexpr dd(double h, double l) : hi(h), lo(l) {}

    double value() const { return hi + lo; }
    bool is_zero() const { return hi == 0.0 && lo == 0.0; }
};

inline dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

inline dd quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline dd dd_add(dd a, dd b) {
    dd s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline dd dd_add(dd a, double b) { return dd_add(a, dd(b)); }

inline dd dd_mul(dd a, double b) {
    dd p = two_prod(a.hi, b);
    p.lo += a.lo * b;
    return quick_two_sum(p.hi, p.lo);
}

inline dd dd_mul(dd a, dd b) {
    dd p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline dd dd_neg(dd a) { return {-a.hi, -a.lo}; }

inline dd dd_abs(dd a) { return (a.hi < 0.0 || (a.hi == 0.0 && a.lo < 0.0)) ? dd_neg(a) : a; }

inline dd dd_sqrt(dd a) {
    if (a.hi <= 0.0) return dd(0.0);
    double x = std::sqrt(a.hi);
    // one Newton step in double-double
    dd x2 = two_prod(x, x);
    dd r = dd_add(a, dd_neg(x2));
    return dd_add(dd(x), dd(r.value() / (2.0 * x)));
}

inline int dd_cmp(dd a, dd b) {
    if (a.hi < b.hi) return -1;
    if (a.hi > b.hi) return 1;
    if (a.lo < b.lo) return -1;
    if (a.lo > b.lo) return 1;
    return 0;
}

/// Compensated dot product of an integer lattice vector with a real vector.
inline dd dd_dot(const double* v, const long long* xi, int dim) {
    dd acc(0.0);
    for (int i = 0; i < dim; ++i) {
        acc = dd_add(acc, two_prod(v[i], static_cast<double>(xi[i])));
    }
    return acc;
}

} // namespace blhomlab
