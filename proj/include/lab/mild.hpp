#pragma once

#include "lab/core.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace lab {

// Mild solutions of the forced Navier-Stokes system in the half space,
//   u(t) = ∫ G(t) u0 + ∫_0^t ∫ K̃(t - τ) (u⊗u - F)(τ) dy dτ,
// on half-space grids with periodic tangential axes.

using TensorSeries = TimeSeries<TensorField>;

/// t_m = T (m/M)², m = 0..M.
std::vector<double> graded_nodes(double T, int M);

/// Nodes and weights with Σ w_k g(τ_k) ≈ ∫_0^t (t - τ)^{-1/2} g(τ) dτ; exact when g is a
/// polynomial of degree < points in t - τ, with nodes clustered at τ = t.
struct SingularRule {
    std::vector<double> tau, w;
};

SingularRule singular_rule(double t, int levels = 4, int points = 6);

/// ∫ G(t; x, y) u0(y) dy; the identity at t = 0.
VectorField semigroup_term(const VectorField& u0, double t);

/// S = u⊗u - F, the tensor the Duhamel kernel acts on.
TensorField assemble_quadratic_source(const VectorField& u, const TensorField* F = nullptr);

/// ∫ K̃(s; x, y) S(y) dy at a single lag s > 0.
VectorField kernel_action(const TensorField& S, double s);

/// ∫_0^t ∫ K̃(t - τ; x, y) S(τ, y) dy dτ from frames at the nodes of S up to t.
VectorField duhamel_term(const TensorSeries& S, double t);

/// max_i Σ_j ‖G_ij(t; x, ·)‖_{L¹} and max_i Σ_kl ‖K̃_i,kl(t; x, ·)‖_{L¹} at height x_n.
struct KernelL1 {
    double g = 0.0;
    double ktilde = 0.0;
};

struct ProbeGrid {
    double h = 1.0 / 32;
    double tangential = 8.0;
    double normal = 4.0;
};

KernelL1 probe_kernel_l1(int n, double t, double x_n, const ProbeGrid& pg = {});

/// Probe sweep over t at a height far from the boundary relative to √t. Both norms
/// depend on x_n/√t only; C is the far-field limit of √t ‖K̃‖ extrapolated in √t/x_n
/// from the two smallest times, C0 the largest ‖G‖ seen (including one probe at t = 1/4).
struct KernelConstants {
    double C = 0.0;
    double C0 = 0.0;
    double x_n = 0.0;
    std::vector<double> times;
    std::vector<KernelL1> values;
    double slope = 0.0;  // log-log slope of ‖K̃‖ over the sweep
};

KernelConstants measure_kernel_constants(int n, const ProbeGrid& pg = {}, double x_n = 2.0,
                                         std::vector<double> times = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128});

/// 8 C C0 (‖u0‖ + ‖F‖) √T ≤ 1/2, with ∫_0^t C (t - τ)^{-1/2} dτ = 2C√t.
struct SmallnessCheck {
    double lhs = 0.0;
    double admissible_T = 0.0;
    bool ok = false;
};

SmallnessCheck check_smallness(double C, double C0, double data_norm, double T);

struct MildProblem {
    VectorField u0;
    std::function<TensorField(double)> F;  // empty means F = 0
    double T = 0.2;
    int time_nodes = 24;
    double tol = 1e-10;
    int max_iter = 25;
    KernelConstants constants;  // measured on demand when C = 0
    bool enforce_smallness = true;
};

struct PicardState {
    int m = 0;
    double sup_norm = 0.0;
    double diff_norm = 0.0;
    double ratio = 0.0;
};

struct PicardResult {
    VectorSeries u;
    std::vector<PicardState> states;
    SmallnessCheck smallness;
    bool converged = false;
    double residual = 0.0;  // sup |Φ(u) - u| for the returned iterate, when converged

};

/// Successive approximation on graded nodes; throws when the smallness check fails
/// or when the difference ratio exceeds 0.9 three times in a row.
PicardResult picard_solve(const MildProblem& p);

/// Mild formula at times in (0, T] from a converged iterate.
VectorSeries evaluate_mild(const MildProblem& p, const PicardResult& r, const std::vector<double>& times);

/// Columns m, sup_norm, diff_norm, ratio.
void write_picard_csv(const std::filesystem::path& path, const std::vector<PicardState>& states);

}  // namespace lab
