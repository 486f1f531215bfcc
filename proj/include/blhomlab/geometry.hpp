#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace blhomlab::geometry {

using LatticeVec = std::array<long long, 3>; ///< lattice vector, entries beyond dim are 0

/// Orthonormal frame attached to a half-space boundary direction.
///
/// M is orthogonal with M e_d = n; the first d-1 columns span the boundary
/// hyperplane (the matrix called N). For d=2 frames built from exactly
/// rational data the integer tangent generator is kept alongside the floating
/// point columns, so tangential dot products with lattice vectors can be
/// taken exactly.
struct NormalFrame {
    int dim = 2;
    std::array<double, 3> n{};                    ///< unit normal
    std::array<std::array<double, 3>, 3> col{};   ///< columns of M; col[dim-1] == n
    double offset = 0.0;                          ///< boundary offset a

    bool has_exact_tangent = false;               ///< d=2 only
    std::array<long long, 2> tangent_int{};      ///< tangent is parallel to this (exactly)

    const std::array<double, 3>& tangential(int j) const { return col[j]; }
    std::array<double, 3> normal() const { return n; }
};

/// Normalize n_raw and complete it to an orthonormal basis (Gram-Schmidt on
/// canonical vectors; pivot = smallest index whose projection residual
/// exceeds 1e-8). d must be 2 or 3. Throws InvalidInput on a zero vector.
NormalFrame build_frame(std::span<const double> n_raw, double a);

/// d=2 frame whose boundary runs along (1, phi)/sqrt(1+phi^2), phi the golden
/// ratio: the canonical badly approximable direction. |N^T (1,0)| equals
/// 1/sqrt(1+phi^2) = 0.5257311...
NormalFrame golden_direction(double a = 0.0);

struct LiouvilleDirection {
    NormalFrame frame;
    double slope;              ///< L = sum_{k<=levels} 10^{-k!}
    long long denominator;     ///< 10^{levels!}: L is exactly rational at this scale
    long long validity_radius; ///< below this |xi|, no exact lattice zeros exist
};

/// d=2 frame whose boundary runs along (1, L)/sqrt(1+L^2) with the truncated
/// Liouville slope L = sum_{k=1..levels} 10^{-k!}. The truncation makes the
/// direction rational at denominator 10^{levels!}; small-divisor violations
/// at radii well below validity_radius behave like the untruncated number.
/// Throws InvalidInput when 10^{levels!} is not representable (levels >= 4).
LiouvilleDirection liouville_direction(int levels, double a = 0.0);

/// Smallest-norm integer vector parallel to n within angular tolerance 1e-10,
/// entries bounded by qmax; nullopt when none exists.
std::optional<LatticeVec> rationality_test(const NormalFrame& frame, long long qmax);

struct Violation {
    LatticeVec xi;
    double abs_ndot; ///< |N^T xi|
};

struct DiophantineReport {
    int dim = 2;
    double tau = 0.0;
    long long radius = 0;                 ///< scan bound on |xi|
    double best_constant = 0.0;           ///< inf over scanned xi of |N^T xi| |xi|^{d+tau}
    LatticeVec worst_xi{};                ///< achieves the inf (lexicographic tie-break)
    double worst_abs_ndot = 0.0;
    std::vector<Violation> violations;    ///< |N^T xi| < |xi|^{-d-tau}
    long long zero_count = 0;             ///< exact zeros among the violations
    bool rational_warning = false;        ///< rationality_test(qmax=radius) succeeded
};

/// Enumerate all lattice vectors 0 < |xi| <= xi_max and grade the direction.
/// Exact zeros (possible for rational frames) are reported as violations.
DiophantineReport small_divisor_scan(const NormalFrame& frame, double tau, long long xi_max);

struct XiEntry {
    int level = 0;       ///< M
    LatticeVec xi{};
    double abs_ndot = 0; ///< |N^T xi_M|
    double norm = 0;     ///< |xi_M|
};

struct XiSequence {
    std::vector<XiEntry> entries;
    long long search_radius = 0;
    bool truncated = false;          ///< search radius exhausted before m_max
    int first_unreachable_level = 0; ///< set when truncated
    int dim = 2;
};

/// Recursive argmin construction of lattice vectors with
///   |xi_M| > |xi_{M-1}| + 1   and   |N^T xi_M| < (1/M) |xi_M|^{-M},
/// minimal Euclidean norm, lexicographic (xi1, then xi2) tie-break.
/// Stops with a truncation flag when search_radius is exhausted; throws when
/// even level 1 has no witness inside the radius, or when the frame is
/// rational at scale min(search_radius, 1000). d=2 only.
XiSequence xi_sequence(const NormalFrame& frame, int m_max, long long search_radius);

/// Recheck every entry of a sequence against its defining inequalities.
bool verify_xi_sequence(const NormalFrame& frame, const XiSequence& seq);

struct ContinuedFraction {
    std::vector<long long> quotients;                     ///< a_0, a_1, ...
    std::vector<std::pair<long long, long long>> convergents; ///< (p_k, q_k)
    bool terminated = false; ///< expansion ended (rational input at double precision)
};

/// Standard continued-fraction expansion of a real slope, with convergents.
ContinuedFraction continued_fraction(double slope, int depth);

/// |N^T xi|: exact when the frame carries an integer tangent, otherwise
/// compensated double-double accumulation.
double tangential_component(const NormalFrame& frame, const LatticeVec& xi);

/// n . xi in compensated arithmetic (for the orthogonal-decomposition check).
double normal_component(const NormalFrame& frame, const LatticeVec& xi);

} // namespace blhomlab::geometry
