#pragma once

#include "lab/core.hpp"
#include "lab/extension.hpp"

#include <functional>
#include <optional>

namespace lab {

/// ∂^m_t f evaluated at time t.
using Forcing = std::function<VectorField(double t, int m)>;

/// ∂_t u = ∂_i(a_ij ∂_j u) + ∂_i f_i with time-independent a.
struct ParabolicProblem {
    TensorField a;
    Forcing f;  // empty means f = 0
    ScalarField u_init;
    double t_start = 0.0;
    double t_end = 1.0;
    double dt = 1e-3;
    double theta = 0.5;                // 0 explicit, 1/2 Crank-Nicolson, 1 implicit
    std::vector<double> output_times;  // empty: every step
    // Growth constants |u| ≤ A1 e^{A2|x|²}, |∂^k f| ≤ A1 C^k k^k e^{A2|x|²}; metadata only.
    double A1 = 1.0, A2 = 0.0, C = 1.0;
};

/// θ-scheme on a whole-space grid. Bounded box faces hold their initial values.
ScalarSeries solve(const ParabolicProblem& p);

/// Direct half-space solve on a half-space grid: Dirichlet rows at x_n = 0 are
/// pinned to zero; conormal rows use the even ghost reflection across x_n = 0.
ScalarSeries solve_halfspace(const ParabolicProblem& p, BoundaryMode mode);

/// Entry k approximates ∂^k_t u(t0): entry k = L(entry k-1) + ∂_i ∂^{k-1}_t f_i(t0).
struct DerivativeLadder {
    double t0 = 0.0;
    std::vector<ScalarField> d;
    /// Nodes farther than `margin` from every bounded face are unaffected by face rows.
    double margin = 0.0;
};

DerivativeLadder derivative_ladder(const ParabolicProblem& p, const ScalarField& u_t0, double t0, int k_max);

/// ‖∇u‖_{L²(Q_r)} / ((R-r)^{-1}‖u‖_{L²(Q_R)} + Σ‖f_i‖_{L²(Q_R)}); 0 for a zero denominator.
double audit_caccioppoli(const ScalarSeries& u, const VectorSeries* f, double r, double R, double t0, const Point& x0);

/// ‖u‖_{L∞(Q_{R/2})} / (R^{-1-n/2}‖u‖_{L²(Q_R)} + R^{1-(n+2)/p}Σ‖f_i‖_{L^p(Q_R)}), p ∈ {2, ∞}.
double audit_local_boundedness(const ScalarSeries& u, const VectorSeries* f, double R, double t0, const Point& x0,
                               double p = std::numeric_limits<double>::infinity());

/// ‖∂_t u‖_{L²(Q)} / (δΣ‖∂_t f_i‖_{L²(Q^δ)} + δ^{-1}(‖∇u‖_{L²(Q^δ)} + Σ‖f_i‖_{L²(Q^δ)})) for
/// Q = (S, T) x B_r(x0) and Q^δ = (S - δ², T) x B_{r+δ}(x0). Time derivatives by central differences.
double audit_time_derivative(const ScalarSeries& u, const VectorSeries* f, double S, double T, const Point& x0, double r,
                             double delta);

struct GrowthFit {
    double a3 = 0.0;      // smallest A3 closing |d_k| ≤ A1 A3^{k+1} e^{2A2|x0|²} k^k for k = 0..k_max
    double a3_lsq = 0.0;  // least squares of (k+1) log A3 against log|d_k| - log(A1 e^{2A2|x0|²} k^k), k ≥ 1
    double a3_rate = 0.0; // exp of the least-squares slope of log|d_k| in k
    std::vector<double> values;     // |d_k(x0)|
    std::vector<double> residuals;  // log|d_k| - log(bound with a3), ≤ 0
};

/// Ladder values are read at the node nearest to x0.
GrowthFit growth_fit(const DerivativeLadder& ladder, const Point& x0, double A1, double A2);
GrowthFit growth_fit(const std::vector<double>& values, const Point& x0, double A1, double A2);

/// Σ_{j<J} d_j (t - t0)^j / j!. Requires |t - t0| ≤ delta and J ≥ 6; throws when
/// the terms stop decaying.
ScalarField taylor_reconstruct(const DerivativeLadder& ladder, double delta, double t, int J);

/// Max error against `reference` of every partial sum J = 1..size.
std::vector<double> taylor_errors(const DerivativeLadder& ladder, double t, const ScalarField& reference);

}  // namespace lab
