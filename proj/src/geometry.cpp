#include "blhomlab/geometry.hpp"

#include "blhomlab/dd.hpp"
#include "blhomlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace blhomlab::geometry {

namespace {

constexpr double kPivotTol = 1e-8;
constexpr double kAngularTol = 1e-10;

double norm3(const std::array<double, 3>& v, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

bool lex_less(const LatticeVec& a, const LatticeVec& b, int dim) {
    for (int i = 0; i < dim; ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

long long gcd_ll(long long a, long long b) {
    a = std::llabs(a);
    b = std::llabs(b);
    while (b) {
        long long t = a % b;
        a = b;
        b = t;
    }
    return a;
}

/// Exact check of |xi| > prev + 1 where |xi|^2 = ns and prev = sqrt(ps),
/// both integers:  ns > ps + 1 + 2 sqrt(ps)  <=>  (ns - ps - 1)^2 > 4 ps
/// whenever ns - ps - 1 > 0.
bool norm_gap_ok(long long ns, long long ps) {
    long long diff = ns - ps - 1;
    if (diff <= 0) return false;
    return static_cast<__int128>(diff) * diff > static_cast<__int128>(4) * ps;
}

} // namespace

double tangential_component(const NormalFrame& frame, const LatticeVec& xi) {
    if (frame.dim == 2 && frame.has_exact_tangent) {
        const auto& T = frame.tangent_int;
        __int128 dot = static_cast<__int128>(T[0]) * xi[0] + static_cast<__int128>(T[1]) * xi[1];
        if (dot == 0) return 0.0;
        dd nrm2 = dd_add(two_prod(double(T[0]), double(T[0])),
                         two_prod(double(T[1]), double(T[1])));
        double adot = double(dot < 0 ? -dot : dot);
        return adot / dd_sqrt(nrm2).value();
    }
    if (frame.dim == 2) {
        double t[2] = {frame.col[0][0], frame.col[0][1]};
        dd s = dd_dot(t, xi.data(), 2);
        return dd_abs(s).value();
    }
    // d=3: two tangential columns
    double acc = 0;
    for (int j = 0; j < 2; ++j) {
        double t[3] = {frame.col[j][0], frame.col[j][1], frame.col[j][2]};
        dd s = dd_dot(t, xi.data(), 3);
        double v = s.value();
        acc += v * v;
    }
    return std::sqrt(acc);
}

double normal_component(const NormalFrame& frame, const LatticeVec& xi) {
    double nv[3] = {frame.n[0], frame.n[1], frame.n[2]};
    return dd_dot(nv, xi.data(), frame.dim).value();
}

NormalFrame build_frame(std::span<const double> n_raw, double a) {
    const int dim = static_cast<int>(n_raw.size());
    if (dim != 2 && dim != 3)
        throw InvalidInput("build_frame: dimension must be 2 or 3");

    std::array<double, 3> raw{};
    double nn = 0;
    for (int i = 0; i < dim; ++i) {
        raw[i] = n_raw[i];
        nn += raw[i] * raw[i];
    }
    if (!(nn > 0) || !std::isfinite(nn))
        throw InvalidInput("build_frame: normal vector must be nonzero and finite");

    NormalFrame f;
    f.dim = dim;
    f.offset = a;
    double inv = 1.0 / std::sqrt(nn);
    for (int i = 0; i < dim; ++i) f.n[i] = raw[i] * inv;

    // Complete to an orthonormal basis: Gram-Schmidt over e_1, e_2, ...
    // accepting the smallest index whose residual exceeds the pivot tolerance.
    int accepted = 0;
    for (int i = 0; i < dim && accepted < dim - 1; ++i) {
        std::array<double, 3> r{};
        r[i] = 1.0;
        double dn = f.n[i];
        for (int k = 0; k < dim; ++k) r[k] -= dn * f.n[k];
        for (int j = 0; j < accepted; ++j) {
            double dt = r[0] * f.col[j][0] + r[1] * f.col[j][1] + r[2] * f.col[j][2];
            for (int k = 0; k < dim; ++k) r[k] -= dt * f.col[j][k];
        }
        double rn = norm3(r, dim);
        if (rn > kPivotTol) {
            for (int k = 0; k < dim; ++k) f.col[accepted][k] = r[k] / rn;
            ++accepted;
        }
    }
    f.col[dim - 1] = f.n;

    // Exactly integer d=2 input: keep the integer tangent generator so that
    // N^T xi can be computed without roundoff.
    if (dim == 2) {
        bool integral = true;
        for (int i = 0; i < 2; ++i) {
            if (std::abs(raw[i]) > 1e15 || raw[i] != std::nearbyint(raw[i])) integral = false;
        }
        if (integral) {
            long long p = static_cast<long long>(raw[0]);
            long long q = static_cast<long long>(raw[1]);
            long long g = gcd_ll(p, q);
            p /= g;
            q /= g;
            // tangent from the same pivot rule: sign(n2)(n2,-n1) when n2 != 0
            std::array<long long, 2> T{};
            if (q != 0) {
                long long s = q > 0 ? 1 : -1;
                T = {s * q, -s * p};
            } else {
                long long s = p > 0 ? 1 : -1;
                T = {0, s * p};
            }
            long long tg = gcd_ll(T[0], T[1]);
            T[0] /= tg;
            T[1] /= tg;
            f.has_exact_tangent = true;
            f.tangent_int = T;
        }
    }
    return f;
}

NormalFrame golden_direction(double a) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double raw[2] = {-phi, 1.0};
    return build_frame(std::span<const double>(raw, 2), a);
}

LiouvilleDirection liouville_direction(int levels, double a) {
    if (levels < 3)
        throw InvalidInput("liouville_direction: levels must be >= 3");
    // denominator 10^{levels!} must stay in range
    long long fact = 1;
    for (int k = 2; k <= levels; ++k) fact *= k;
    if (fact > 18)
        throw InvalidInput("liouville_direction: 10^{levels!} overflows the representable "
                           "range; use smaller levels");
    long long den = 1;
    for (long long i = 0; i < fact; ++i) den *= 10;
    long long num = 0;
    long long kf = 1;
    for (int k = 1; k <= levels; ++k) {
        kf *= k;
        long long p = 1;
        for (long long i = 0; i < fact - kf; ++i) p *= 10;
        num += p;
    }
    const double L = static_cast<double>(num) / static_cast<double>(den);

    LiouvilleDirection out;
    const double raw[2] = {-L, 1.0};
    out.frame = build_frame(std::span<const double>(raw, 2), a);
    // exact tangent (den, num): parallel to (1, L)
    long long g = gcd_ll(den, num);
    out.frame.has_exact_tangent = true;
    out.frame.tangent_int = {den / g, num / g};
    out.slope = L;
    out.denominator = den;
    out.validity_radius =
        static_cast<long long>(std::floor(std::hypot(double(den / g), double(num / g)))) - 1;
    return out;
}

std::optional<LatticeVec> rationality_test(const NormalFrame& frame, long long qmax) {
    if (qmax < 1) throw InvalidInput("rationality_test: qmax must be >= 1");
    int j = 0;
    for (int i = 1; i < frame.dim; ++i) {
        if (std::abs(frame.n[i]) > std::abs(frame.n[j])) j = i;
    }
    for (long long q = 1; q <= qmax; ++q) {
        LatticeVec p{};
        bool in_range = true;
        for (int i = 0; i < frame.dim; ++i) {
            double ideal = q * frame.n[i] / frame.n[j];
            double r = std::nearbyint(ideal);
            if (std::abs(r) > double(qmax)) {
                in_range = false;
                break;
            }
            p[i] = static_cast<long long>(r);
        }
        if (!in_range) continue;
        double pn = 0, dot = 0;
        for (int i = 0; i < frame.dim; ++i) {
            pn += double(p[i]) * double(p[i]);
            dot += double(p[i]) * frame.n[i];
        }
        if (pn == 0) continue;
        pn = std::sqrt(pn);
        double ortho2 = 0;
        for (int i = 0; i < frame.dim; ++i) {
            double c = double(p[i]) - dot * frame.n[i];
            ortho2 += c * c;
        }
        if (std::sqrt(ortho2) / pn <= kAngularTol) {
            long long g = 0;
            for (int i = 0; i < frame.dim; ++i) g = gcd_ll(g, p[i]);
            for (int i = 0; i < frame.dim; ++i) p[i] /= g;
            if (dot < 0) {
                for (int i = 0; i < frame.dim; ++i) p[i] = -p[i];
            }
            return p;
        }
    }
    return std::nullopt;
}

namespace {

/// Violation test |N^T xi| < |xi|^{-d-tau}, done on logarithms.
bool violates(double s, long long norm_sq, int dim, double tau) {
    if (s == 0.0) return true;
    return std::log(s) < -0.5 * (dim + tau) * std::log(double(norm_sq));
}

} // namespace

DiophantineReport small_divisor_scan(const NormalFrame& frame, double tau, long long xi_max) {
    if (xi_max < 1) throw InvalidInput("small_divisor_scan: xi_max must be >= 1");
    if (tau < 0) throw InvalidInput("small_divisor_scan: tau must be >= 0");

    DiophantineReport rep;
    rep.dim = frame.dim;
    rep.tau = tau;
    rep.radius = xi_max;
    rep.best_constant = std::numeric_limits<double>::infinity();

    const double expo = 0.5 * (frame.dim + tau);
    const long long R2 = xi_max * xi_max;

    // fast double-precision filter before the compensated recomputation
    const bool exact = frame.dim == 2 && frame.has_exact_tangent;
    double t0[3] = {frame.col[0][0], frame.col[0][1], frame.col[0][2]};
    double t1[3] = {frame.col[1][0], frame.col[1][1], frame.col[1][2]};

    auto consider = [&](const LatticeVec& xi, long long norm_sq) {
        double s;
        if (exact || frame.dim == 3) {
            s = tangential_component(frame, xi);
        } else {
            double fast = t0[0] * double(xi[0]) + t0[1] * double(xi[1]);
            double scale = std::abs(double(xi[0])) + std::abs(double(xi[1]));
            s = std::abs(fast);
            if (s < 1e-8 * scale) s = tangential_component(frame, xi);
        }
        double v = s * std::exp(expo * std::log(double(norm_sq)));
        if (v < rep.best_constant ||
            (v == rep.best_constant && lex_less(xi, rep.worst_xi, frame.dim))) {
            rep.best_constant = v;
            rep.worst_xi = xi;
            rep.worst_abs_ndot = s;
        }
        if (violates(s, norm_sq, frame.dim, tau)) {
            rep.violations.push_back({xi, s});
            if (s == 0.0) ++rep.zero_count;
        }
    };

    if (frame.dim == 2) {
        for (long long x = -xi_max; x <= xi_max; ++x) {
            long long ymax = static_cast<long long>(std::floor(std::sqrt(double(R2 - x * x))));
            while (x * x + ymax * ymax > R2) --ymax;
            for (long long y = -ymax; y <= ymax; ++y) {
                if (x == 0 && y == 0) continue;
                consider({x, y, 0}, x * x + y * y);
            }
        }
        (void)t1;
    } else {
        for (long long x = -xi_max; x <= xi_max; ++x) {
            for (long long y = -xi_max; y <= xi_max; ++y) {
                long long rem = R2 - x * x - y * y;
                if (rem < 0) continue;
                long long zmax = static_cast<long long>(std::floor(std::sqrt(double(rem))));
                while (x * x + y * y + zmax * zmax > R2) --zmax;
                for (long long z = -zmax; z <= zmax; ++z) {
                    if (x == 0 && y == 0 && z == 0) continue;
                    consider({x, y, z}, x * x + y * y + z * z);
                }
            }
        }
    }

    std::sort(rep.violations.begin(), rep.violations.end(),
              [&](const Violation& a, const Violation& b) {
                  long long na = 0, nb = 0;
                  for (int i = 0; i < frame.dim; ++i) {
                      na += a.xi[i] * a.xi[i];
                      nb += b.xi[i] * b.xi[i];
                  }
                  if (na != nb) return na < nb;
                  return lex_less(a.xi, b.xi, frame.dim);
              });

    rep.rational_warning = rationality_test(frame, xi_max).has_value();
    return rep;
}

namespace {

/// Small-divisor constraint |N^T xi| < (1/M) |xi|^{-M}, on logarithms.
bool level_constraint(double s, long long norm_sq, int level) {
    if (s == 0.0) return true;
    return std::log(s) < -std::log(double(level)) - 0.5 * level * std::log(double(norm_sq));
}

} // namespace

XiSequence xi_sequence(const NormalFrame& frame, int m_max, long long search_radius) {
    if (frame.dim != 2)
        throw InvalidInput("xi_sequence: supported for d=2 frames only");
    if (m_max < 1) throw InvalidInput("xi_sequence: m_max must be >= 1");
    if (search_radius < 1) throw InvalidInput("xi_sequence: search_radius must be >= 1");
    if (rationality_test(frame, std::min<long long>(search_radius, 1000)).has_value())
        throw InvalidInput("xi_sequence: direction is rational; the construction needs an "
                           "irrational normal");

    XiSequence seq;
    seq.dim = 2;
    seq.search_radius = search_radius;

    // tangent components; iterate over the coordinate multiplying the smaller one
    double tx = frame.col[0][0], ty = frame.col[0][1];
    const int j = std::abs(tx) >= std::abs(ty) ? 0 : 1; // solved-for coordinate
    const int i = 1 - j;
    const double ratio = (j == 0) ? ty / tx : tx / ty;

    const long long R2 = search_radius * search_radius;
    long long prev_norm_sq = 0;
    bool have_prev = false;

    for (int level = 1; level <= m_max; ++level) {
        bool found = false;
        long long best_ns = 0;
        LatticeVec best{};
        double best_s = 0;

        for (long long ak = 0; ak <= search_radius; ++ak) {
            // |xi| >= |xi_i| = ak: nothing can beat the incumbent beyond it
            if (found && ak * ak > best_ns) break;
            for (int sgn : {1, -1}) {
                if (ak == 0 && sgn < 0) continue;
                const long long k = sgn * ak;
                double center = -ratio * double(k);
                if (std::abs(center) > double(search_radius) + 3) continue;
                long long base = static_cast<long long>(std::floor(center));
                for (long long c = base - 2; c <= base + 3; ++c) {
                    LatticeVec xi{};
                    xi[i] = k;
                    xi[j] = c;
                    if (xi[0] == 0 && xi[1] == 0) continue;
                    long long ns = xi[0] * xi[0] + xi[1] * xi[1];
                    if (ns > R2) continue;
                    if (have_prev && !norm_gap_ok(ns, prev_norm_sq)) continue;
                    if (found && (ns > best_ns || (ns == best_ns && !lex_less(xi, best, 2))))
                        continue;
                    double s = tangential_component(frame, xi);
                    if (!level_constraint(s, ns, level)) continue;
                    found = true;
                    best_ns = ns;
                    best = xi;
                    best_s = s;
                }
            }
        }

        if (!found) {
            if (level == 1)
                throw std::runtime_error(
                    "xi_sequence: no witness within search radius " +
                    std::to_string(search_radius) + " at level 1");
            seq.truncated = true;
            seq.first_unreachable_level = level;
            break;
        }
        XiEntry e;
        e.level = level;
        e.xi = best;
        e.abs_ndot = best_s;
        e.norm = std::sqrt(double(best_ns));
        seq.entries.push_back(e);
        prev_norm_sq = best_ns;
        have_prev = true;
    }
    return seq;
}

bool verify_xi_sequence(const NormalFrame& frame, const XiSequence& seq) {
    long long prev_ns = 0;
    bool have_prev = false;
    for (const auto& e : seq.entries) {
        long long ns = 0;
        for (int i = 0; i < seq.dim; ++i) ns += e.xi[i] * e.xi[i];
        if (ns == 0) return false;
        if (have_prev && !norm_gap_ok(ns, prev_ns)) return false;
        double s = tangential_component(frame, e.xi);
        if (!level_constraint(s, ns, e.level)) return false;
        if (std::abs(s - e.abs_ndot) > 1e-12 * std::max(1.0, s)) return false;
        prev_ns = ns;
        have_prev = true;
    }
    return true;
}

ContinuedFraction continued_fraction(double slope, int depth) {
    if (!std::isfinite(slope)) throw InvalidInput("continued_fraction: slope must be finite");
    if (depth < 1) throw InvalidInput("continued_fraction: depth must be >= 1");

    // The argument is a dyadic rational; expand that value exactly with
    // integer Euclid so the deep quotients are not drowned in roundoff.
    ContinuedFraction cf;
    __int128 num, den;
    if (slope == 0.0) {
        num = 0;
        den = 1;
    } else {
        int e2;
        double m = std::frexp(std::abs(slope), &e2); // |slope| = m 2^{e2}, m in [1/2, 1)
        long long mant = static_cast<long long>(std::ldexp(m, 53)); // exact 53-bit integer
        int shift = 53 - e2;                                        // |slope| = mant / 2^shift
        if (shift < 0) {
            if (-shift > 60)
                throw InvalidInput("continued_fraction: slope magnitude too large");
            num = static_cast<__int128>(mant) << (-shift);
            den = 1;
        } else if (shift <= 96) {
            num = mant;
            den = static_cast<__int128>(1) << shift;
        } else {
            // extremely small slopes: truncate below 2^-96
            num = static_cast<__int128>(mant) >> (shift - 96);
            den = static_cast<__int128>(1) << 96;
        }
        if (slope < 0) num = -num;
    }

    __int128 h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    const __int128 lim = std::numeric_limits<long long>::max();
    for (int it = 0; it < depth; ++it) {
        __int128 a = num >= 0 ? num / den : -((-num + den - 1) / den); // floor division
        if (a > lim || a < -lim) break;
        __int128 h = a * h1 + h2;
        __int128 k = a * k1 + k2;
        if (h > lim || h < -lim || k > lim) break;
        cf.quotients.push_back(static_cast<long long>(a));
        cf.convergents.emplace_back(static_cast<long long>(h), static_cast<long long>(k));
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        __int128 rem = num - a * den;
        if (rem == 0) {
            cf.terminated = true;
            break;
        }
        num = den;
        den = rem;
    }
    return cf;
}

} // namespace blhomlab::geometry
