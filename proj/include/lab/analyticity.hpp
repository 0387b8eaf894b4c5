#pragma once

#include "lab/core.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lab {

using Rational = boost::multiprecision::cpp_rational;

/// Polynomial in t with exact rational coefficients; c[i] multiplies t^i.
/// Trailing zeros are stripped, so the zero polynomial has no coefficients.
struct PolynomialInT {
    std::vector<Rational> c;

    PolynomialInT() = default;
    explicit PolynomialInT(std::vector<Rational> coeffs);

    int degree() const { return static_cast<int>(c.size()) - 1; }  // -1 for zero
    bool is_zero() const { return c.empty(); }
    Rational operator()(const Rational& t) const;

    friend bool operator==(const PolynomialInT& a, const PolynomialInT& b) { return a.c == b.c; }
};

PolynomialInT operator+(const PolynomialInT& a, const PolynomialInT& b);
PolynomialInT operator-(const PolynomialInT& a, const PolynomialInT& b);
PolynomialInT operator*(const PolynomialInT& a, const PolynomialInT& b);
PolynomialInT operator*(const Rational& s, const PolynomialInT& a);

/// ∂^k_t p.
PolynomialInT derivative(const PolynomialInT& p, int k = 1);
/// t^j p.
PolynomialInT times_power(const PolynomialInT& p, int j);
Rational binomial_exact(int k, int j);

/// Degree uniform in [0, max_degree], coefficients p/q with |p| ≤ 9, 1 ≤ q ≤ 9.
PolynomialInT random_polynomial(std::mt19937_64& rng, int max_degree);

/// ∂^k(t^k f g) = Σ_j C(k,j) ∂^j(t^j f) ∂^{k-j}(t^{k-j} g) - k Σ_j C(k-1,j) ∂^j(t^j f) ∂^{k-1-j}(t^{k-1-j} g).
bool lemma_leibniz_check(const PolynomialInT& f, const PolynomialInT& g, int k);

/// ∂^k(t^j u) = k ∂^{k-1}(t^{j-1} u) + t ∂^k(t^{j-1} u).
bool shift_recurrence_check(const PolynomialInT& u, int j, int k);

struct LemmaReport {
    int trials = 0;
    int leibniz_failures = 0;
    int shift_failures = 0;
    bool ok() const { return leibniz_failures == 0 && shift_failures == 0; }
};

/// Random instances with degrees ≤ 8 and k ≤ 8 (shift: j, k ≤ 6).
LemmaReport verify_lemmas(int trials, std::uint64_t seed);

/// r_k = Σ_{j=1}^{k-1} C(k,j) j^{j-2/3} (k-j)^{k-j-2/3} / k^{k-2/3}, in log space.
double lemma_sum_ratio(int k);

/// Same ratio with (n-j)^{n-j-2/3} in place of (k-j)^{k-j-2/3}; empty when some n - j ≤ 0.
std::optional<double> lemma_sum_ratio_literal(int k, int n);

struct SumRatioSweep {
    std::vector<double> r;  // r[k], k = 2..k_max (r[0] = r[1] = 0)
    double sup = 0.0;       // over 2 ≤ k ≤ k_max
    double sup_half = 0.0;  // over 2 ≤ k ≤ k_max / 2
    int argmax = 0;
};

SumRatioSweep sum_ratio_sweep(int k_max);

/// t_i = (a + b)/2 + (b - a)/2 cos(π i/(N-1)), i = 0..N-1 (descending).
std::vector<double> chebyshev_nodes(double a, double b, int N);

/// ∂^k_t u at eval times from a series on Chebyshev nodes of [a, b], by Chebyshev
/// coefficients per node and component, chopped at the rounding floor.
template <class F>
struct TimeDerivatives {
    std::vector<double> eval_times;
    std::vector<std::vector<F>> d;  // d[e][k]
    std::vector<double> condition;  // ε Σ_j |T_j^{(k)}(x)| over retained j, worst eval time
    int k_max = 0;                  // after truncation
    bool truncated = false;
};

/// Requires N ≥ 2 k_max + 8 and k_max ≤ 10; eval times default to the window centre.
/// Orders whose condition exceeds `threshold` are dropped.
template <class F>
TimeDerivatives<F> estimate_time_derivatives(const TimeSeries<F>& series, int k_max,
                                             std::vector<double> eval_times = {}, double threshold = 1e-2);

enum class EnvelopeForm { Mk_k, M_k_minus_twothirds, fassum };

const char* envelope_form_name(EnvelopeForm f);
EnvelopeForm parse_envelope_form(const std::string& s);

/// Smallest M with v_k ≤ M^{k+1} k^k (Mk_k), M^{k-1/2} k^{k-2/3}, or M^k k^{k-1} (fassum), k ≥ 1.
struct GrowthEnvelope {
    EnvelopeForm form = EnvelopeForm::Mk_k;
    std::vector<double> v;         // v[k], v[0] unused
    std::vector<double> per_k;     // constant closing order k alone
    std::vector<double> prefix_M;  // M over 1..K for each K
    double M = 0.0;
    bool pass = false;  // finite M and every v_k ≤ bound
    double bound(int k) const;
};

GrowthEnvelope fit_envelope(const std::vector<double>& v, EnvelopeForm form = EnvelopeForm::Mk_k);

/// sup over the eval times of t^k ‖∂^k_t u(t)‖_∞.
template <class F>
std::vector<double> envelope_values(const TimeDerivatives<F>& td);

/// δ = 1 / ρ with ρ the geometric mean of (|d_k|/k!)^{1/k} over the last three k.
struct RadiusEstimate {
    double delta = 0.0;
    bool capped = false;       // δ ≥ cap
    bool lower_bound = false;  // tail of (|d_k|/k!)^{1/k} not monotone
    std::vector<double> rho;   // rho[k], k ≥ 1
};

RadiusEstimate radius_estimate(const std::vector<double>& d, double cap);

/// Envelope and radius from a Chebyshev series on [a, b]. Derivatives are taken at the
/// centre t0 and t0 ± (b - a)/6; the radius uses t0^k ‖∂^k_t u(t0)‖_∞, so δ is in units
/// of t0 and capped at (b - a)/t0.
struct AnalyticityReport {
    double t0 = 0.0;
    std::vector<double> eval_times;
    int k_max = 0;
    bool truncated = false;
    std::vector<double> v;             // envelope values
    GrowthEnvelope envelope;
    std::vector<double> d;             // t0^k ‖∂^k_t u(t0)‖_∞
    RadiusEstimate radius;
    std::vector<double> delta_prefix;  // δ from orders 0..k, k ≥ 3 (NaN below)
};

template <class F>
AnalyticityReport analyze_series(const TimeSeries<F>& series, int k_max, EnvelopeForm form = EnvelopeForm::Mk_k);

/// Columns k, v_k, bound_Mkk, M_fit, delta_est.
void write_envelope_csv(const std::filesystem::path& path, const AnalyticityReport& r);

}  // namespace lab
