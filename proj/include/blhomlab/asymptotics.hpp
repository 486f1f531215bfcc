#pragma once

#include "blhomlab/blsolver.hpp"
#include "blhomlab/geometry.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace blhomlab::asymptotics {

struct DecaySample {
    double t;
    double l2;
    double linf;
};

enum class DecayModel { Exponential, Power, Degenerate };

struct DecayReport {
    std::vector<DecaySample> samples;
    DecayModel model = DecayModel::Degenerate;
    double amplitude = 0;     ///< fitted C
    double rate_or_slope = 0; ///< kappa (exponential) or log-log slope (power)
    double tail = 0;
    double fit_residual = 0;  ///< RMS residual of the log fit
    bool downgraded = false;  ///< exponential fit rejected (log residual > 0.05)
};

struct FitResult {
    double amplitude = 0;
    double rate_or_slope = 0;
    double residual = 0;
    int used = 0;
    int dropped = 0; ///< nonpositive norms removed before fitting
};

/// Least squares of log(norm) against t. Returns kappa > 0 for decay.
FitResult fit_exponential(const std::vector<std::pair<double, double>>& samples);
/// Least squares of log(norm) against log(t). Returns the slope.
FitResult fit_power(const std::vector<std::pair<double, double>>& samples);

/// Deviation norms of a grid field against a tail value, per slice height.
std::vector<DecaySample> sample_decay(const blsolver::GridField& field, double tail);
std::vector<DecaySample> sample_decay(const blsolver::SeriesField& field,
                                      const std::vector<double>& t_list);

/// Exponential fit with the 0.05 log-residual downgrade rule.
DecayReport build_decay_report(const std::vector<DecaySample>& samples, double tail,
                               double t_min, double t_max);

struct ErgodicRow {
    double radius;
    double window_mean;
    double gap; ///< |window_mean - torus_mean|
};

struct ErgodicReport {
    std::vector<ErgodicRow> rows;
    double torus_mean = 0;
    bool resonant = false; ///< window means are not converging to the torus mean
};

/// Birkhoff line averages (1/2R) int_{|s|<R} F(N s) ds against the exact torus
/// mean, for F on T^2.
ErgodicReport ergodic_mean(const std::function<double(double, double)>& torus_fn,
                           const geometry::NormalFrame& frame, const std::vector<double>& radii);

/// Series tail: exactly v0_hat(0).
double tail_estimate(const blsolver::SeriesField& field);

struct PlateauTail {
    double value;
    double uncertainty; ///< oscillation of the top slab
};

/// Average of the top 10% slab; throws (advising a larger T) when the slab
/// oscillation exceeds 10x the solver tolerance scale.
PlateauTail tail_estimate(const blsolver::GridField& field, double tolerance_scale = 1e-7);

/// Rational-direction tail for identity coefficients:
/// (1/L) int_0^L v0(M(s, a_frac)) ds.
double rational_tail_formula(const blsolver::BoundaryFn& v0, const geometry::NormalFrame& frame,
                             double a_frac);

struct SupRow {
    int m;
    double sup;       ///< sup over the t grid of t^m * ||V(.,t) - v0_hat(0)||_{L2}
    double arg_t;
    bool flat;        ///< no growth over the top decade of t
};

/// Super-polynomial decay probe for exact series fields.
std::vector<SupRow> small_divisor_decay_check(const blsolver::SeriesField& field,
                                              const std::vector<int>& m_list,
                                              const std::vector<double>& t_grid);

/// ||V(.,t) - v0_hat(0)||_{L2(T^2)} by grid quadrature (Parseval cross-check).
double series_l2_by_quadrature(const blsolver::SeriesField& field, double t, int grid = 128);

enum class WitnessVariant { L2, Linf };

struct WitnessLevel {
    int level = 0;               ///< M
    std::array<long long, 2> xi{};
    double abs_ndot = 0;         ///< |N^T xi_M|
    double log_coeff = 0;        ///< log of M^{-l} |xi_M|^{-Ml}
    double log_t = 0;            ///< log of t_M = l M |xi_M|^M / (2 pi)
    double t = 0;                ///< exp(log_t); may overflow to inf harmlessly
    bool retained = true;        ///< false below M^(1) in the Linf variant
    bool overflow_skip = false;  ///< level not representable even in log space
};

struct SlowWitness {
    double l = 1;
    WitnessVariant variant = WitnessVariant::L2;
    double tangential_radius = 0; ///< R (Linf variant)
    int m_start = 1;              ///< M^(1): first retained level (Linf variant)
    geometry::XiSequence sequence;
    std::vector<WitnessLevel> levels;
    double log_norm_const = 0;    ///< log of sqrt2 (e^{-1} l/(2 pi))^l (L2)
                                  ///< or of   2   (e^{-1} l/(2 pi))^l (Linf)

    /// Shallow levels as plain Fourier data (coefficients that fit in doubles).
    blsolver::FourierBoundaryData representable_data() const;
};

/// Build the slow-convergence witness: coefficients M^{-l}|xi_M|^{-Ml} on the
/// levels of xi_sequence(frame, m_max, search_radius); the Linf variant drops
/// the levels below M^(1), the smallest M making the retention chain
/// 2 pi |xi_M . N| R < (2 pi R / M) |xi_M|^{-M} and 2 pi R / M < pi/4 hold for
/// every deeper level.
SlowWitness slow_witness_build(const geometry::NormalFrame& frame, double l, int m_max,
                               WitnessVariant variant, double tangential_radius,
                               long long search_radius);

struct WitnessRow {
    int level;
    double t;                 ///< t_M
    double log_value;         ///< log deviation norm (L2) or log v(0, t_M) (Linf)
    double log_threshold;     ///< -l log t_M (the bare bound, for normalized data)
    double log_paper_bound;   ///< log_norm_const - l log t_M (bound for raw data)
    bool pass;                ///< raw >= paper bound (equivalently normalized >= bare)
    double margin;            ///< exp(log_value - log_paper_bound) >= 1 when passing
};

struct WitnessReport {
    std::vector<WitnessRow> rows;
    bool all_pass = true;
};

/// Level-by-level verification, in log space throughout. The raw coefficient
/// table guarantees value >= sqrt2 (e^{-1} l/(2 pi))^l t_M^{-l}; the same
/// data normalized by that constant makes the bound exactly t_M^{-l}.
WitnessReport slow_witness_verify(const SlowWitness& witness,
                                  const geometry::NormalFrame& frame);

struct OffsetRow {
    double a;
    double tail;
    double uncertainty;
};

struct OffsetReport {
    std::vector<OffsetRow> rows;
    double spread = 0;
    bool rational_mode = false; ///< spread computed from the rational tail formula
    double series_spread = 0;   ///< exact series path: 0 for irrational frames
};

struct QuasiParams {
    double iota = 1e-4;
    double T = 8.0;
    int n_theta = 16;
    int n_t = 256;
    blsolver::IterOptions iter{};
};

/// Tail versus boundary offset: grid-solver path for irrational frames
/// (plateau tails of the shifted problems), rational tail formula otherwise.
OffsetReport tail_offset_independence(const blsolver::FourierBoundaryData& v0,
                                      const cell::PeriodicCoefficients& coeffs,
                                      const geometry::NormalFrame& frame,
                                      const std::vector<double>& a_list,
                                      const QuasiParams& params = {});

} // namespace blhomlab::asymptotics
