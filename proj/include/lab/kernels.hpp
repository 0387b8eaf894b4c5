#pragma once

#include "lab/core.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace lab {

// Index convention: components 0..n-1, component n-1 is the normal direction.

struct QuadratureSpec {
    double r_trunc = 8.0;   // Gaussian truncation radius in standard deviations √(2t)
    int nodes = 64;         // nodes per axis of tensor rules
    double tol = 1e-8;      // relative tolerance of adaptive rules
};

/// exp(u²) erfc(u) for u ≥ 0 without overflow.
double erfcx(double u);

/// Laplace fundamental solution: (1/2π) ln|z| for n = 2, -1/(4π|z|) for n = 3.
double eval_E(const Point& z, int n);

/// y* = (y', -y_n).
Point reflect(const Point& y, int n);

/// Neumann (sign +1) or Dirichlet (sign -1) Green function E(x-y) ± E(x-y*).
double eval_N(const Point& x, const Point& y, int n, int sign = +1);

/// s-th time derivative of the heat kernel (4πt)^{-n/2} exp(-|x|²/4t).
double eval_Gamma(double t, const Point& x, int n, int s = 0);

/// J(x, y) = ∫_0^x e^{-a(x-z)} g_t(z+y) dz with g_t the 1-d heat kernel.
double layer_integral(double a, double t, double x, double y);

/// ∂_y J.
double layer_integral_dy(double a, double t, double x, double y);

/// Tangential Fourier symbol of the Green tensor at frequency ξ (n-1 entries),
/// normal coordinates x, y: returns δ_ij e^{-a²t}[g(x-y) - g(x+y)] + correction.
std::complex<double> green_symbol(double t, const double* xi, int n, double x, double y, int i, int j);

enum class KernelRoute {
    Slab,    // physical-space quadrature over the slab / half space
    Fourier  // tangential Fourier transform, closed-form normal factors
};

struct GValue {
    double value = 0.0;  // G_ij
    double gstar = 0.0;  // G_ij - δ_ij Γ(t, x-y)
    double error = 0.0;  // quadrature error estimate
};

/// Green tensor of the half-space Stokes problem.
GValue eval_G(double t, const Point& x, const Point& y, int i, int j, int n, const QuadratureSpec& spec = {},
              KernelRoute route = KernelRoute::Fourier);

struct KValue {
    double value = 0.0;
    double error = 0.0;
};

/// K_ijq = ∫ G_ij(t; x, z) ∂_{z_q} N^±(z, y) dz. The slab route is n = 2 only.
KValue eval_K(double t, const Point& x, const Point& y, int i, int j, int q, int n, int sign = +1,
              const QuadratureSpec& spec = {}, KernelRoute route = KernelRoute::Fourier);

enum class L1Kernel { Gamma, Gstar };

/// ‖∂^s_t ∇^d_y kernel(t; x, ·)‖_{L¹} over the half space (whole space for Γ).
/// Gamma: s ≤ 2, d ≤ 2 (d = 1 Euclidean gradient norm, d = 2 Frobenius Hessian norm).
/// Gstar: d = 0, s ≤ 2, matrix norm max_i Σ_j ‖G*_ij‖, tangential FFT box.
double l1_norm_y(L1Kernel kernel, double t, double x_n, int n, int s = 0, int d = 0, const QuadratureSpec& spec = {});

struct ScalingScan {
    std::vector<double> t;
    std::vector<double> value;
    double slope = 0.0;  // least-squares slope of log value against log t
};

/// Evaluates `norm` at t ∈ {1, 1/2, 1/4, 1/8} (or the given times) and fits the slope.
ScalingScan scan_t(const std::function<double(double)>& norm, std::vector<double> times = {1.0, 0.5, 0.25, 0.125});

/// Least-squares slope of log v against log t.
double loglog_slope(const std::vector<double>& t, const std::vector<double>& v);

/// Pointwise envelope |v| ≤ C base e^{-c ζ}.
struct PointwiseEnvelope {
    double C = 0.0;
    double c = 0.0;          // 0 when fitted without the exponential factor
    double residual = 0.0;   // rms of the log-linear fit
    int samples = 0;
    double max_excess = 0.0; // max over samples of |v| / envelope (≤ 1 by construction)
};

/// Fits log(|v|/base) ≈ L - c ζ by least squares, then raises C until every
/// sample lies under the envelope. `with_decay = false` fixes c = 0.
PointwiseEnvelope fit_pointwise_envelope(const std::vector<double>& v, const std::vector<double>& base,
                                         const std::vector<double>& zeta, bool with_decay);

}  // namespace lab
