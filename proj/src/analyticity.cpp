#include "lab/analyticity.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace lab {

PolynomialInT::PolynomialInT(std::vector<Rational> coeffs) : c(std::move(coeffs)) {
    while (!c.empty() && c.back() == 0) c.pop_back();
}

Rational PolynomialInT::operator()(const Rational& t) const {
    Rational acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
}

PolynomialInT operator+(const PolynomialInT& a, const PolynomialInT& b) {
    std::vector<Rational> r(std::max(a.c.size(), b.c.size()));
    for (std::size_t i = 0; i < a.c.size(); ++i) r[i] += a.c[i];
    for (std::size_t i = 0; i < b.c.size(); ++i) r[i] += b.c[i];
    return PolynomialInT(std::move(r));
}

PolynomialInT operator-(const PolynomialInT& a, const PolynomialInT& b) { return a + Rational(-1) * b; }

PolynomialInT operator*(const PolynomialInT& a, const PolynomialInT& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> r(a.c.size() + b.c.size() - 1);
    for (std::size_t i = 0; i < a.c.size(); ++i)
        for (std::size_t j = 0; j < b.c.size(); ++j) r[i + j] += a.c[i] * b.c[j];
    return PolynomialInT(std::move(r));
}

PolynomialInT operator*(const Rational& s, const PolynomialInT& a) {
    std::vector<Rational> r = a.c;
    for (auto& x : r) x *= s;
    return PolynomialInT(std::move(r));
}

PolynomialInT derivative(const PolynomialInT& p, int k) {
    if (k < 0) throw Error("derivative order must be non-negative");
    std::vector<Rational> r = p.c;
    for (int step = 0; step < k && !r.empty(); ++step) {
        for (std::size_t i = 1; i < r.size(); ++i) r[i - 1] = r[i] * static_cast<int>(i);
        r.pop_back();
    }
    return PolynomialInT(std::move(r));
}

PolynomialInT times_power(const PolynomialInT& p, int j) {
    if (j < 0) throw Error("power must be non-negative");
    if (p.is_zero()) return {};
    std::vector<Rational> r(j, Rational(0));
    r.insert(r.end(), p.c.begin(), p.c.end());
    return PolynomialInT(std::move(r));
}

Rational binomial_exact(int k, int j) {
    if (j < 0 || j > k) return 0;
    boost::multiprecision::cpp_int b = 1;
    for (int i = 1; i <= j; ++i) b = b * (k - j + i) / i;
    return Rational(b);
}

PolynomialInT random_polynomial(std::mt19937_64& rng, int max_degree) {
    std::uniform_int_distribution<int> deg(0, max_degree), num(-9, 9), den(1, 9);
    std::vector<Rational> c(deg(rng) + 1);
    for (auto& x : c) x = Rational(num(rng), den(rng));
    return PolynomialInT(std::move(c));
}

bool lemma_leibniz_check(const PolynomialInT& f, const PolynomialInT& g, int k) {
    if (k < 1) throw Error("lemma requires k >= 1");
    auto a = [&](int j) { return derivative(times_power(f, j), j); };
    auto b = [&](int j) { return derivative(times_power(g, j), j); };
    PolynomialInT lhs = derivative(times_power(f * g, k), k);
    PolynomialInT rhs;
    for (int j = 0; j <= k; ++j) rhs = rhs + binomial_exact(k, j) * (a(j) * b(k - j));
    for (int j = 0; j <= k - 1; ++j) rhs = rhs - Rational(k) * binomial_exact(k - 1, j) * (a(j) * b(k - 1 - j));
    return lhs == rhs;
}

bool shift_recurrence_check(const PolynomialInT& u, int j, int k) {
    if (j < 1 || k < 1) throw Error("shift recurrence requires j >= 1 and k >= 1");
    PolynomialInT lhs = derivative(times_power(u, j), k);
    PolynomialInT rhs = Rational(k) * derivative(times_power(u, j - 1), k - 1) + times_power(derivative(times_power(u, j - 1), k), 1);
    return lhs == rhs;
}

LemmaReport verify_lemmas(int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> k8(1, 8), k6(1, 6);
    LemmaReport rep;
    rep.trials = trials;
    for (int i = 0; i < trials; ++i) {
        PolynomialInT f = random_polynomial(rng, 8), g = random_polynomial(rng, 8);
        if (!lemma_leibniz_check(f, g, k8(rng))) ++rep.leibniz_failures;
        PolynomialInT u = random_polynomial(rng, 8);
        int j = k6(rng), k = k6(rng);
        if (!shift_recurrence_check(u, j, k)) ++rep.shift_failures;
    }
    return rep;
}

namespace {

constexpr double kTwoThirds = 2.0 / 3.0;

double log_choose(int k, int j) { return std::lgamma(k + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0); }

double log_sum_exp(const std::vector<double>& x) {
    double m = *std::max_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace

double lemma_sum_ratio(int k) {
    if (k < 2) throw Error("lemma_sum_ratio requires k >= 2");
    std::vector<double> terms;
    for (int j = 1; j <= k - 1; ++j)
        terms.push_back(log_choose(k, j) + (j - kTwoThirds) * std::log(j) + (k - j - kTwoThirds) * std::log(k - j));
    return std::exp(log_sum_exp(terms) - (k - kTwoThirds) * std::log(k));
}

std::optional<double> lemma_sum_ratio_literal(int k, int n) {
    if (k < 2) throw Error("lemma_sum_ratio requires k >= 2");
    std::vector<double> terms;
    for (int j = 1; j <= k - 1; ++j) {
        if (n - j <= 0) return std::nullopt;
        terms.push_back(log_choose(k, j) + (j - kTwoThirds) * std::log(j) + (n - j - kTwoThirds) * std::log(n - j));
    }
    return std::exp(log_sum_exp(terms) - (k - kTwoThirds) * std::log(k));
}

SumRatioSweep sum_ratio_sweep(int k_max) {
    if (k_max < 2) throw Error("sweep requires k_max >= 2");
    SumRatioSweep s;
    s.r.assign(k_max + 1, 0.0);
    for (int k = 2; k <= k_max; ++k) {
        s.r[k] = lemma_sum_ratio(k);
        if (!std::isfinite(s.r[k])) throw Error("lemma_sum_ratio overflow at k = " + std::to_string(k));
        if (s.r[k] > s.sup) {
            s.sup = s.r[k];
            s.argmax = k;
        }
        if (k <= k_max / 2) s.sup_half = std::max(s.sup_half, s.r[k]);
    }
    return s;
}

std::vector<double> chebyshev_nodes(double a, double b, int N) {
    if (N < 2 || !(b > a)) throw Error("chebyshev_nodes requires N >= 2 and b > a");
    std::vector<double> t(N);
    for (int i = 0; i < N; ++i) t[i] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(std::numbers::pi * i / (N - 1));
    return t;
}

namespace {

/// w[k][j] = T_j^{(k)}(x), j < N, k ≤ K.
std::vector<std::vector<double>> chebyshev_derivative_values(double x, int N, int K) {
    std::vector<std::vector<double>> w(K + 1, std::vector<double>(N, 0.0));
    w[0][0] = 1.0;
    if (N > 1) {
        w[0][1] = x;
        if (K >= 1) w[1][1] = 1.0;
    }
    for (int j = 1; j + 1 < N; ++j)
        for (int k = 0; k <= K; ++k)
            w[k][j + 1] = 2.0 * x * w[k][j] - w[k][j - 1] + (k > 0 ? 2.0 * k * w[k - 1][j] : 0.0);
    return w;
}

constexpr double kChop = 1e-13;

}  // namespace

template <class F>
TimeDerivatives<F> estimate_time_derivatives(const TimeSeries<F>& series, int k_max, std::vector<double> eval_times,
                                             double threshold) {
    const int N = static_cast<int>(series.size());
    if (k_max < 0 || k_max > 10) throw Error("k_max must lie in [0, 10]");
    if (N < 2 * k_max + 8) throw Error("series needs at least 2 k_max + 8 Chebyshev nodes");
    const double a = *std::min_element(series.times.begin(), series.times.end());
    const double b = *std::max_element(series.times.begin(), series.times.end());
    const double L = b - a;
    if (!(L > 0)) throw Error("series window is empty");
    const int P = N - 1;

    // Position of each frame in the descending node order.
    std::vector<int> slot(N, -1);
    std::vector<int> frame_at(N, -1);
    for (int i = 0; i < N; ++i) {
        double x = std::clamp((2.0 * series.times[i] - a - b) / L, -1.0, 1.0);
        int s = static_cast<int>(std::lround(std::acos(x) * P / std::numbers::pi));
        double expect = std::cos(std::numbers::pi * s / P);
        if (std::abs(expect - x) > 1e-9 || frame_at[s] >= 0) throw Error("series times are not Chebyshev nodes of their window");
        slot[i] = s;
        frame_at[s] = i;
    }

    const Grid& g = series.frames.front().grid();
    for (const auto& f : series.frames)
        if (!f.grid().same_as(g)) throw Error("series frames live on different grids");
    const std::size_t V = series.frames.front().values().size();
    const int comps = series.frames.front().components();

    // Chebyshev coefficients per value, DCT-I of the node samples.
    std::vector<std::vector<double>> cosm(N, std::vector<double>(N));
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) cosm[j][i] = std::cos(std::numbers::pi * static_cast<double>(i) * j / P);
    std::vector<double> coef(V * N, 0.0);
    for (std::size_t v = 0; v < V; ++v) {
        for (int j = 0; j < N; ++j) {
            double s = 0.0;
            for (int i = 0; i < N; ++i) {
                double fi = series.frames[frame_at[i]].values()[v];
                s += (i == 0 || i == P ? 0.5 : 1.0) * fi * cosm[j][i];
            }
            coef[v * N + j] = s * 2.0 / P * (j == 0 || j == P ? 0.5 : 1.0);
        }
    }

    // Chop below the rounding floor of each component.
    std::vector<double> scale(comps, 0.0);
    for (std::size_t v = 0; v < V; ++v)
        for (int j = 0; j < N; ++j) scale[v % comps] = std::max(scale[v % comps], std::abs(coef[v * N + j]));
    std::vector<int> len(V, 0);
    int n_eff = 1;
    for (std::size_t v = 0; v < V; ++v) {
        int last = -1;
        for (int j = 0; j < N; ++j)
            if (std::abs(coef[v * N + j]) > kChop * scale[v % comps]) last = j;
        len[v] = last + 1;
        n_eff = std::max(n_eff, len[v]);
    }

    TimeDerivatives<F> out;
    if (eval_times.empty()) eval_times.push_back(0.5 * (a + b));
    for (double t : eval_times)
        if (t < a - 1e-12 * L || t > b + 1e-12 * L) throw Error("evaluation time outside the series window");
    out.eval_times = eval_times;

    std::vector<std::vector<std::vector<double>>> w;
    for (double t : eval_times) w.push_back(chebyshev_derivative_values((2.0 * t - a - b) / L, N, k_max));

    out.k_max = k_max;
    out.condition.assign(k_max + 1, 0.0);
    for (int k = 0; k <= k_max; ++k) {
        for (const auto& we : w) {
            double amp = 0.0;
            for (int j = 0; j < n_eff; ++j) amp += std::abs(we[k][j]);
            out.condition[k] = std::max(out.condition[k], kChop * amp);
        }
        if (out.condition[k] > threshold) {
            out.k_max = k - 1;
            out.truncated = true;
            out.condition.resize(k);
            break;
        }
    }
    if (out.k_max < 0) throw Error("time differentiation is ill-conditioned at every order");

    for (std::size_t e = 0; e < eval_times.size(); ++e) {
        std::vector<F> de;
        double factor = 1.0;
        for (int k = 0; k <= out.k_max; ++k) {
            F f(g);
            for (std::size_t v = 0; v < V; ++v) {
                double s = 0.0;
                for (int j = 0; j < len[v]; ++j) s += coef[v * N + j] * w[e][k][j];
                f.values()[v] = factor * s;
            }
            de.push_back(std::move(f));
            factor *= 2.0 / L;
        }
        out.d.push_back(std::move(de));
    }
    return out;
}

template TimeDerivatives<ScalarField> estimate_time_derivatives(const ScalarSeries&, int, std::vector<double>, double);
template TimeDerivatives<VectorField> estimate_time_derivatives(const VectorSeries&, int, std::vector<double>, double);

template <class F>
std::vector<double> envelope_values(const TimeDerivatives<F>& td) {
    std::vector<double> v(td.k_max + 1, 0.0);
    for (std::size_t e = 0; e < td.eval_times.size(); ++e)
        for (int k = 0; k <= td.k_max; ++k)
            v[k] = std::max(v[k], std::pow(td.eval_times[e], k) * td.d[e][k].max_abs());
    return v;
}

template std::vector<double> envelope_values(const TimeDerivatives<ScalarField>&);
template std::vector<double> envelope_values(const TimeDerivatives<VectorField>&);

const char* envelope_form_name(EnvelopeForm f) {
    switch (f) {
    case EnvelopeForm::Mk_k: return "Mk_k";
    case EnvelopeForm::M_k_minus_twothirds: return "M_k_minus_twothirds";
    case EnvelopeForm::fassum: return "fassum";
    }
    return "";
}

EnvelopeForm parse_envelope_form(const std::string& s) {
    for (EnvelopeForm f : {EnvelopeForm::Mk_k, EnvelopeForm::M_k_minus_twothirds, EnvelopeForm::fassum})
        if (s == envelope_form_name(f)) return f;
    throw Error("unknown envelope form: " + s);
}

namespace {

// bound = M^{p(k)} k^{q(k)}
double power_of_M(EnvelopeForm f, int k) {
    switch (f) {
    case EnvelopeForm::Mk_k: return k + 1.0;
    case EnvelopeForm::M_k_minus_twothirds: return k - 0.5;
    case EnvelopeForm::fassum: return k;
    }
    return k;
}

double power_of_k(EnvelopeForm f, int k) {
    switch (f) {
    case EnvelopeForm::Mk_k: return k;
    case EnvelopeForm::M_k_minus_twothirds: return k - kTwoThirds;
    case EnvelopeForm::fassum: return k - 1.0;
    }
    return k;
}

}  // namespace

double GrowthEnvelope::bound(int k) const {
    return std::pow(M, power_of_M(form, k)) * std::pow(static_cast<double>(k), power_of_k(form, k));
}

GrowthEnvelope fit_envelope(const std::vector<double>& v, EnvelopeForm form) {
    if (v.size() < 2) throw Error("fit_envelope needs values for k >= 1");
    GrowthEnvelope env;
    env.form = form;
    env.v = v;
    env.per_k.assign(v.size(), 0.0);
    env.prefix_M.assign(v.size(), 0.0);
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] >= 0) || !std::isfinite(v[k])) throw Error("envelope values must be finite and non-negative");
        const int kk = static_cast<int>(k);
        if (v[k] > 0)
            env.per_k[k] = std::exp((std::log(v[k]) - power_of_k(form, kk) * std::log(static_cast<double>(k))) / power_of_M(form, kk));
        env.M = std::max(env.M, env.per_k[k]);
        env.prefix_M[k] = env.M;
    }
    env.pass = std::isfinite(env.M);
    for (std::size_t k = 1; k < v.size() && env.pass; ++k)
        if (v[k] > env.bound(static_cast<int>(k)) * (1 + 1e-12)) env.pass = false;
    return env;
}

RadiusEstimate radius_estimate(const std::vector<double>& d, double cap) {
    if (d.size() < 4) throw Error("radius_estimate needs d_k for k = 0..3 at least");
    if (!(cap > 0)) throw Error("radius cap must be positive");
    RadiusEstimate r;
    const int K = static_cast<int>(d.size()) - 1;
    r.rho.assign(K + 1, 0.0);
    for (int k = 1; k <= K; ++k) {
        double a = std::abs(d[k]);
        r.rho[k] = a > 0 ? std::exp((std::log(a) - std::lgamma(k + 1.0)) / k) : 0.0;
    }
    const double r0 = r.rho[K - 2], r1 = r.rho[K - 1], r2 = r.rho[K];
    const double slack = 1e-9 * std::max({r0, r1, r2});
    const bool down = r1 <= r0 + slack && r2 <= r1 + slack;
    const bool up = r1 >= r0 - slack && r2 >= r1 - slack;
    double rho;
    if (!down && !up) {
        r.lower_bound = true;
        rho = std::max({r0, r1, r2});
    } else if (r0 > 0 && r1 > 0 && r2 > 0) {
        rho = std::cbrt(r0 * r1 * r2);
    } else {
        rho = std::max({r0, r1, r2});
    }
    if (rho <= 0 || 1.0 / rho >= cap) {
        r.delta = cap;
        r.capped = true;
    } else {
        r.delta = 1.0 / rho;
    }
    return r;
}

template <class F>
AnalyticityReport analyze_series(const TimeSeries<F>& series, int k_max, EnvelopeForm form) {
    if (series.size() == 0) throw Error("empty series");
    const double a = *std::min_element(series.times.begin(), series.times.end());
    const double b = *std::max_element(series.times.begin(), series.times.end());
    AnalyticityReport r;
    r.t0 = 0.5 * (a + b);
    auto td = estimate_time_derivatives(series, k_max, {r.t0, r.t0 - (b - a) / 6, r.t0 + (b - a) / 6});
    r.eval_times = td.eval_times;
    r.k_max = td.k_max;
    r.truncated = td.truncated;
    r.v = envelope_values(td);
    r.envelope = fit_envelope(r.v, form);
    for (int k = 0; k <= td.k_max; ++k) r.d.push_back(std::pow(r.t0, k) * td.d[0][k].max_abs());
    const double cap = (b - a) / r.t0;
    r.delta_prefix.assign(r.d.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 3; k < r.d.size(); ++k)
        r.delta_prefix[k] = radius_estimate(std::vector<double>(r.d.begin(), r.d.begin() + k + 1), cap).delta;
    if (r.d.size() < 4) throw Error("radius estimate needs k_max >= 3 after truncation");
    r.radius = radius_estimate(r.d, cap);
    return r;
}

template AnalyticityReport analyze_series(const ScalarSeries&, int, EnvelopeForm);
template AnalyticityReport analyze_series(const VectorSeries&, int, EnvelopeForm);

void write_envelope_csv(const std::filesystem::path& path, const AnalyticityReport& r) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "k,v_k,bound_Mkk,M_fit,delta_est\n";
    char line[160];
    for (std::size_t k = 1; k < r.v.size(); ++k) {
        const double M = r.envelope.prefix_M[k];
        const double bound = std::pow(M, k + 1.0) * std::pow(static_cast<double>(k), static_cast<double>(k));
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,", k, r.v[k], bound, M);
        os << line;
        if (std::isfinite(r.delta_prefix[k])) {
            std::snprintf(line, sizeof line, "%.17g", r.delta_prefix[k]);
            os << line;
        }
        os << '\n';
    }
}

}  // namespace lab
