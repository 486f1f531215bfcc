#include "blhomlab/asymptotics.hpp"

#include "blhomlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace blhomlab::asymptotics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

FitResult log_fit(const std::vector<std::pair<double, double>>& samples, bool log_abscissa,
                  const char* what) {
    FitResult out;
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, v] : samples) {
        if (v > 0 && (!log_abscissa || t > 0)) {
            pts.emplace_back(log_abscissa ? std::log(t) : t, std::log(v));
        } else {
            ++out.dropped;
        }
    }
    if (pts.size() < 4)
        throw InvalidInput(std::string(what) + ": need at least 4 usable samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double m = double(pts.size());
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    double inter = (sy - slope * sx) / m;
    double rss = 0;
    for (auto& [x, y] : pts) {
        double e = y - (inter + slope * x);
        rss += e * e;
    }
    out.amplitude = std::exp(inter);
    out.rate_or_slope = slope;
    out.residual = std::sqrt(rss / m);
    out.used = static_cast<int>(pts.size());
    return out;
}

} // namespace

FitResult fit_exponential(const std::vector<std::pair<double, double>>& samples) {
    FitResult r = log_fit(samples, false, "fit_exponential");
    r.rate_or_slope = -r.rate_or_slope; // report the decay rate kappa
    return r;
}

FitResult fit_power(const std::vector<std::pair<double, double>>& samples) {
    return log_fit(samples, true, "fit_power");
}

std::vector<DecaySample> sample_decay(const blsolver::GridField& field, double tail) {
    std::vector<DecaySample> out;
    const double ht = field.T / field.nt;
    const size_t ns = static_cast<size_t>(field.n1) * field.n2;
    for (int j = 0; j <= field.nt; ++j) {
        double l2 = 0, li = 0;
        for (size_t k = 0; k < ns; ++k) {
            double d = field.v[static_cast<size_t>(j) * ns + k] - tail;
            l2 += d * d;
            li = std::max(li, std::abs(d));
        }
        out.push_back({field.t0 + j * ht, std::sqrt(l2 / double(ns)), li});
    }
    return out;
}

std::vector<DecaySample> sample_decay(const blsolver::SeriesField& field,
                                      const std::vector<double>& t_list) {
    std::vector<DecaySample> out;
    const int n = 64;
    double tail = field.tail();
    for (double t : t_list) {
        double li = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                li = std::max(li, std::abs(field.eval_theta(double(i) / n, double(j) / n, t) -
                                           tail));
            }
        }
        out.push_back({t, field.l2_deviation(t), li});
    }
    return out;
}

DecayReport build_decay_report(const std::vector<DecaySample>& samples, double tail,
                               double t_min, double t_max) {
    DecayReport rep;
    rep.samples = samples;
    rep.tail = tail;
    std::vector<std::pair<double, double>> window;
    for (const auto& s : samples) {
        if (s.t >= t_min && s.t <= t_max) window.emplace_back(s.t, s.l2);
    }
    double vmax = 0;
    for (auto& [t, v] : window) vmax = std::max(vmax, v);
    if (window.size() < 4 || vmax < 1e-13) {
        rep.model = DecayModel::Degenerate;
        return rep;
    }
    FitResult fe = fit_exponential(window);
    rep.fit_residual = fe.residual;
    if (fe.residual <= 0.05) {
        rep.model = DecayModel::Exponential;
        rep.amplitude = fe.amplitude;
        rep.rate_or_slope = fe.rate_or_slope;
        return rep;
    }
    rep.downgraded = true;
    FitResult fp = fit_power(window);
    rep.model = DecayModel::Power;
    rep.amplitude = fp.amplitude;
    rep.rate_or_slope = fp.rate_or_slope;
    rep.fit_residual = fp.residual;
    return rep;
}

ErgodicReport ergodic_mean(const std::function<double(double, double)>& torus_fn,
                           const geometry::NormalFrame& frame,
                           const std::vector<double>& radii) {
    if (frame.dim != 2) throw InvalidInput("ergodic_mean: d=2 frames only");
    ErgodicReport rep;
    {
        const int n = 256;
        double s = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) s += torus_fn(double(i) / n, double(j) / n);
        }
        rep.torus_mean = s / double(n) / double(n);
    }
    const double t1 = frame.col[0][0], t2 = frame.col[0][1];
    // composite Simpson with a step resolving unit-frequency oscillations
    for (double R : radii) {
        if (!(R > 0)) throw InvalidInput("ergodic_mean: radii must be positive");
        int half = std::max(64, static_cast<int>(std::ceil(R / 0.01)));
        int n = 2 * half;
        double hstep = 2.0 * R / n;
        double acc = 0;
        for (int i = 0; i <= n; ++i) {
            double s = -R + i * hstep;
            double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * torus_fn(t1 * s, t2 * s);
        }
        acc *= hstep / 3.0;
        double mean = acc / (2.0 * R);
        rep.rows.push_back({R, mean, std::abs(mean - rep.torus_mean)});
    }
    if (rep.rows.size() >= 2) {
        double g0 = rep.rows.front().gap, g1 = rep.rows.back().gap;
        rep.resonant = g1 > 1e-6 && g1 > 0.75 * g0;
    }
    return rep;
}

double tail_estimate(const blsolver::SeriesField& field) { return field.tail(); }

PlateauTail tail_estimate(const blsolver::GridField& field, double tolerance_scale) {
    const size_t ns = static_cast<size_t>(field.n1) * field.n2;
    int j_lo = static_cast<int>(std::floor(0.9 * field.nt));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
    size_t count = 0;
    for (int j = j_lo; j <= field.nt; ++j) {
        for (size_t k = 0; k < ns; ++k) {
            double v = field.v[static_cast<size_t>(j) * ns + k];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
            ++count;
        }
    }
    PlateauTail out{sum / double(count), hi - lo};
    double range = std::max(1.0, field.max_value() - field.min_value());
    double limit = 10.0 * std::max(tolerance_scale, field.residual) * range;
    if (out.uncertainty > limit)
        throw InvalidInput("tail_estimate: field has not plateaued over the top slab; "
                           "increase the truncation height T");
    return out;
}

double rational_tail_formula(const blsolver::BoundaryFn& v0, const geometry::NormalFrame& frame,
                             double a_frac) {
    if (frame.dim != 2) throw InvalidInput("rational_tail_formula: d=2 frames only");
    auto p = geometry::rationality_test(frame, 1000);
    if (!p) throw InvalidInput("rational_tail_formula: direction is not rational");
    const double L = std::hypot(double((*p)[0]), double((*p)[1]));
    // smooth periodic integrand: the trapezoid rule converges spectrally
    const int n = 8192;
    double acc = 0;
    for (int i = 0; i < n; ++i) {
        double s = L * double(i) / n;
        double y1 = s * frame.col[0][0] + a_frac * frame.n[0];
        double y2 = s * frame.col[0][1] + a_frac * frame.n[1];
        acc += v0(y1, y2);
    }
    return acc / double(n);
}

std::vector<SupRow> small_divisor_decay_check(const blsolver::SeriesField& field,
                                              const std::vector<int>& m_list,
                                              const std::vector<double>& t_grid) {
    if (t_grid.size() < 8)
        throw InvalidInput("small_divisor_decay_check: t grid too coarse");
    std::vector<SupRow> out;
    double t_hi = t_grid.back();
    for (int m : m_list) {
        SupRow row{m, 0.0, t_grid.front(), true};
        double at_end = 0, at_mid = 0;
        double mid_target = 0.5 * t_hi;
        double best_mid = std::numeric_limits<double>::infinity();
        for (double t : t_grid) {
            double v = std::pow(t, m) * field.l2_deviation(t);
            if (v > row.sup) {
                row.sup = v;
                row.arg_t = t;
            }
            if (t == t_grid.back()) at_end = v;
            if (std::abs(t - mid_target) < best_mid) {
                best_mid = std::abs(t - mid_target);
                at_mid = v;
            }
        }
        // flat: the weighted norm is not growing through the top decade
        row.flat = at_end <= 1.000001 * at_mid || at_end < 0.5 * row.sup;
        out.push_back(row);
    }
    return out;
}

double series_l2_by_quadrature(const blsolver::SeriesField& field, double t, int grid) {
    double tail = field.tail();
    double acc = 0;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            double d = field.eval_theta(double(i) / grid, double(j) / grid, t) - tail;
            acc += d * d;
        }
    }
    return std::sqrt(acc / double(grid) / double(grid));
}

// ---------------------------------------------------------------------------
// Slow-convergence witness

blsolver::FourierBoundaryData SlowWitness::representable_data() const {
    blsolver::FourierBoundaryData data;
    for (const auto& lev : levels) {
        if (!lev.retained || lev.overflow_skip) continue;
        double c = std::exp(lev.log_coeff);
        if (c == 0.0) continue; // underflowed level: kept only in log form
        data.set_mode({static_cast<int>(lev.xi[0]), static_cast<int>(lev.xi[1])}, c);
    }
    return data;
}

SlowWitness slow_witness_build(const geometry::NormalFrame& frame, double l, int m_max,
                               WitnessVariant variant, double tangential_radius,
                               long long search_radius) {
    if (!(l > 0)) throw InvalidInput("slow_witness_build: l must be positive");
    SlowWitness w;
    w.l = l;
    w.variant = variant;
    w.tangential_radius = tangential_radius;
    w.sequence = geometry::xi_sequence(frame, m_max, search_radius);

    for (const auto& e : w.sequence.entries) {
        WitnessLevel lev;
        lev.level = e.level;
        lev.xi = {e.xi[0], e.xi[1]};
        lev.abs_ndot = e.abs_ndot;
        double logxi = std::log(e.norm);
        lev.log_coeff = -l * (std::log(double(e.level)) + e.level * logxi);
        lev.log_t = std::log(l) + std::log(double(e.level)) + e.level * logxi -
                    std::log(kTwoPi);
        lev.t = std::exp(lev.log_t);
        lev.overflow_skip = !std::isfinite(lev.log_t) || !std::isfinite(lev.log_coeff);
        w.levels.push_back(lev);
    }

    if (variant == WitnessVariant::Linf) {
        if (!(tangential_radius > 0))
            throw InvalidInput("slow_witness_build: Linf variant needs a tangential radius");
        // retention chain, evaluated on the built sequence:
        //   2 pi |xi_M . N| R < (2 pi R / M) |xi_M|^{-M}   and   2 pi R / M < pi/4
        int m1 = 0;
        for (int cand = 1; cand <= m_max && m1 == 0; ++cand) {
            bool ok = kTwoPi * tangential_radius / cand < std::numbers::pi / 4.0;
            for (const auto& lev : w.levels) {
                if (lev.level < cand) continue;
                double lhs = lev.abs_ndot == 0.0
                                 ? -std::numeric_limits<double>::infinity()
                                 : std::log(kTwoPi * lev.abs_ndot * tangential_radius);
                // log |xi_M|^{-M} = log_coeff / l + log M
                double rhs = std::log(kTwoPi * tangential_radius / lev.level) +
                             lev.log_coeff / l + std::log(double(lev.level));
                ok = ok && lhs < rhs;
            }
            if (ok) m1 = cand;
        }
        if (m1 == 0)
            throw InvalidInput("slow_witness_build: no retention level satisfies the chain");
        w.m_start = m1;
        for (auto& lev : w.levels) lev.retained = lev.level >= m1;
        w.log_norm_const = std::log(2.0) + l * (std::log(l) - 1.0 - std::log(kTwoPi));
    } else {
        w.m_start = 1;
        w.log_norm_const = 0.5 * std::log(2.0) + l * (std::log(l) - 1.0 - std::log(kTwoPi));
    }
    return w;
}

namespace {

double log_sum_exp(const std::vector<double>& exps) {
    double m = -std::numeric_limits<double>::infinity();
    for (double e : exps) m = std::max(m, e);
    if (!std::isfinite(m)) return m;
    double s = 0;
    for (double e : exps) s += std::exp(e - m);
    return m + std::log(s);
}

} // namespace

WitnessReport slow_witness_verify(const SlowWitness& witness,
                                  const geometry::NormalFrame& frame) {
    WitnessReport rep;
    for (const auto& lev : witness.levels) {
        if (!lev.retained || lev.overflow_skip) continue;
        WitnessRow row;
        row.level = lev.level;
        row.t = lev.t;

        std::vector<double> exps;
        for (const auto& other : witness.levels) {
            if (!other.retained || other.overflow_skip) continue;
            // rate * t_M in log space; exact zeros contribute undamped
            double damp;
            if (other.abs_ndot == 0.0) {
                damp = 0.0;
            } else {
                double lp = std::log(kTwoPi * other.abs_ndot) + lev.log_t;
                damp = lp > 300.0 ? std::numeric_limits<double>::infinity() : std::exp(lp);
            }
            if (witness.variant == WitnessVariant::L2) {
                exps.push_back(std::log(2.0) + 2.0 * other.log_coeff - 2.0 * damp);
            } else {
                exps.push_back(std::log(2.0) + other.log_coeff - damp);
            }
        }
        double lse = log_sum_exp(exps);
        row.log_value = witness.variant == WitnessVariant::L2 ? 0.5 * lse : lse;
        row.log_threshold = -witness.l * lev.log_t;
        row.log_paper_bound = witness.log_norm_const + row.log_threshold;
        row.pass = row.log_value >= row.log_paper_bound;
        row.margin = std::exp(row.log_value - row.log_paper_bound);
        rep.rows.push_back(row);
        rep.all_pass = rep.all_pass && row.pass;
    }
    (void)frame;
    if (rep.rows.empty()) rep.all_pass = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Tail-offset behaviour

OffsetReport tail_offset_independence(const blsolver::FourierBoundaryData& v0,
                                      const cell::PeriodicCoefficients& coeffs,
                                      const geometry::NormalFrame& frame,
                                      const std::vector<double>& a_list,
                                      const QuasiParams& params) {
    if (a_list.empty()) throw InvalidInput("tail_offset_independence: empty offset list");
    OffsetReport rep;
    auto rational = geometry::rationality_test(frame, 1000);
    if (rational) {
        rep.rational_mode = true;
        auto fn = [&](double y1, double y2) { return v0.eval(y1, y2); };
        for (double a : a_list) {
            double tail = rational_tail_formula(fn, frame, a - std::floor(a));
            rep.rows.push_back({a, tail, 0.0});
        }
    } else {
        // the series tails are all v0_hat(0) exactly: shifting multiplies each
        // mode by a unit phase, which fixes xi = 0
        rep.series_spread = 0.0;
        for (double a : a_list) {
            auto data = v0.shifted(frame, a);
            auto shifted_coeffs = cell::PeriodicCoefficients::sample(
                coeffs.grid, [&coeffs, &frame, a](double y1, double y2) {
                    return coeffs.at(y1 + a * frame.n[0], y2 + a * frame.n[1]);
                });
            auto field = blsolver::solve_quasiperiodic_regularized(
                shifted_coeffs, data, frame, params.iota, params.T, params.n_theta, params.n_t,
                params.iter);
            auto tail = tail_estimate(field, params.iter.tolerance);
            rep.rows.push_back({a, tail.value, tail.uncertainty});
        }
    }
    double lo = rep.rows.front().tail, hi = lo;
    for (const auto& r : rep.rows) {
        lo = std::min(lo, r.tail);
        hi = std::max(hi, r.tail);
    }
    rep.spread = hi - lo;
    return rep;
}

} // namespace blhomlab::asymptotics
