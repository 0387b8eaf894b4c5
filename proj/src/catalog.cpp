#include "lab/analyticity.hpp"
#include "lab/experiments.hpp"
#include "lab/extension.hpp"
#include "lab/kernels.hpp"
#include "lab/numerics.hpp"
#include "lab/parabolic.hpp"
#include "lab/projection.hpp"

#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace lab {

namespace {

constexpr double pi = std::numbers::pi;

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

const Json& section(const Json& cfg, const char* key) {
    static const Json empty = Json::object();
    return cfg.contains(key) ? cfg.at(key) : empty;
}

template <class T>
T param(const Json& cfg, const char* sec, const char* key) {
    return section(cfg, sec).at(key).get<T>();
}

double tolerance(const Json& cfg, const char* key) { return param<double>(cfg, "tolerances", key); }

double rel_l2(const VectorField& a, const VectorField& b) {
    double num = 0, den = 0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
        num += (a.values()[k] - b.values()[k]) * (a.values()[k] - b.values()[k]);
        den += b.values()[k] * b.values()[k];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---- lemmas ----------------------------------------------------------------

ExperimentResult run_lemmas(const Json& cfg, std::uint64_t seed, const std::filesystem::path& out) {
    ExperimentResult r;
    const int trials = param<int>(cfg, "params", "trials");
    const int kmax = param<int>(cfg, "params", "kmax");
    const int n = cfg.value("n", 2);
    auto rep = verify_lemmas(trials, seed);
    r.criteria.push_back({1, "exact lemma suite", rep.ok() && rep.trials == trials,
                          "Leibniz failures " + std::to_string(rep.leibniz_failures) + "/" + std::to_string(trials) +
                              ", shift failures " + std::to_string(rep.shift_failures) + "/" + std::to_string(trials)});

    auto sweep = sum_ratio_sweep(kmax);
    CsvWriter csv(out / "sum_ratio.csv", {"k", "r_k", "r_k_literal"});
    bool finite = true;
    for (int k = 2; k <= kmax; ++k) {
        finite = finite && std::isfinite(sweep.r[k]);
        auto lit = lemma_sum_ratio_literal(k, n);
        csv.row({std::to_string(k), csv_number(sweep.r[k]), lit ? csv_number(*lit) : ""});
    }
    r.reports.push_back("sum_ratio.csv");
    const double rel = std::abs(sweep.sup - sweep.sup_half) / sweep.sup;
    r.criteria.push_back({2, "combinatorial bound", finite && rel <= tolerance(cfg, "sup_stability"),
                          fmt("sup r_k over k <= %g: %.6f, over k <= %g: %.6f", kmax, sweep.sup, kmax / 2, sweep.sup_half) +
                              fmt(", relative difference %.4f", rel)});
    return r;
}

// ---- extension-equivalence ---------------------------------------------------

ExperimentResult run_extension(const Json& cfg, std::uint64_t, const std::filesystem::path& out) {
    ExperimentResult r;
    Grid hg = grid_from_json(cfg.at("grid"));
    const int n = hg.dim();
    const double t_end = param<double>(cfg, "time", "t_end"), dt = param<double>(cfg, "time", "dt");
    const int outputs = param<int>(cfg, "time", "outputs");
    std::vector<BoundaryMode> modes{BoundaryMode::Dirichlet, BoundaryMode::Conormal};
    std::vector<std::vector<double>> errs(modes.size());
    std::vector<double> times;
    for (int k = 1; k <= outputs; ++k) times.push_back(t_end * k / outputs);

    parallel_for(static_cast<int>(modes.size()), [&](int mi) {
        const BoundaryMode mode = modes[mi];
        ParabolicProblem p;
        p.a = TensorField::sample(hg, [&](const Point& x, int c) {
            const int i = c / n, j = c % n;
            if (i == j) return 1.0 + 0.2 * std::exp(-x[0] * x[0]);
            return (i == n - 1 || j == n - 1) ? 0.2 * std::exp(-x[0] * x[0]) : 0.0;
        });
        p.u_init = ScalarField::sample(hg, [&](const Point& x) {
            double r2 = 0;
            for (int k = 0; k < n - 1; ++k) r2 += x[k] * x[k];
            double bump = std::exp(-4 * (r2 + (x[n - 1] - 0.5) * (x[n - 1] - 0.5)));
            return mode == BoundaryMode::Dirichlet ? x[n - 1] * bump : bump;
        });
        p.t_end = t_end;
        p.dt = dt;
        p.output_times = times;
        auto direct = solve_halfspace(p, mode);
        ParabolicProblem q = p;
        q.a = extend_coefficients(p.a);
        q.u_init = extend_solution(p.u_init, mode);
        auto via = solve(q);
        for (std::size_t k = 0; k < direct.size(); ++k) {
            auto back = restrict_to_halfspace(via.frames[k], hg);
            errs[mi].push_back((back - direct.frames[k]).max_abs() / direct.frames[k].max_abs());
        }
    });

    CsvWriter csv(out / "extension.csv", {"mode", "t", "rel_linf"});
    double worst = 0;
    for (std::size_t mi = 0; mi < modes.size(); ++mi)
        for (std::size_t k = 0; k < errs[mi].size(); ++k) {
            csv.row({to_string(modes[mi]), csv_number(times[k]), csv_number(errs[mi][k])});
            worst = std::max(worst, errs[mi][k]);
        }
    r.reports.push_back("extension.csv");
    r.criteria.push_back({3, "extension equivalence", worst <= tolerance(cfg, "rel_linf"),
                          fmt("max relative L-infinity difference %.3e (h = %g, dt = %g)", worst, hg.h(), dt)});
    return r;
}

// ---- heat-ladder ---------------------------------------------------------------

ExperimentResult run_heat_ladder(const Json& cfg, std::uint64_t, const std::filesystem::path& out) {
    ExperimentResult r;
    const int cells = param<int>(cfg, "grid", "cells");
    const double h = 2 * pi / cells;
    Grid g = Grid::make(2, {0, 0, 0}, {2 * pi, 4 * h, 0}, h, false, {true, true, false});
    const auto modes = param<std::vector<int>>(cfg, "params", "modes");
    const int kmax = param<int>(cfg, "params", "kmax");
    const double dt = param<double>(cfg, "time", "dt");

    auto heat = [&](int m, double t_end) {
        ParabolicProblem p;
        p.a = identity_coefficients(g);
        p.u_init = ScalarField::sample(g, [m](const Point& x) { return std::sin(m * x[0]); });
        p.t_end = t_end;
        p.dt = dt;
        return p;
    };

    CsvWriter ladder_csv(out / "ladder.csv", {"mode", "k", "abs_dk", "bound", "A3_fit"});
    bool growth_ok = true;
    std::ostringstream detail;
    for (int m : modes) {
        auto p = heat(m, 1.0);
        auto L = derivative_ladder(p, p.u_init, 0.0, kmax);
        auto fit = growth_fit(L, {pi / (2 * m), 0, 0}, 1.0, 0.0);
        const double target = m * m;
        const bool ok = std::abs(fit.a3_rate - target) <= tolerance(cfg, "rate_rel") * target && fit.a3 <= target * (1 + 1e-9);
        growth_ok = growth_ok && ok;
        for (int k = 0; k <= kmax; ++k) {
            double bound = std::pow(fit.a3, k + 1.0) * (k == 0 ? 1.0 : std::pow(k, k));
            ladder_csv.row({std::to_string(m), std::to_string(k), csv_number(fit.values[k]), csv_number(bound), csv_number(fit.a3)});
        }
        detail << "m = " << m << ": rate " << fit.a3_rate << ", A3 " << fit.a3 << "; ";
    }
    r.reports.push_back("ladder.csv");
    r.criteria.push_back({4, "derivative growth", growth_ok, detail.str()});

    const double t0 = param<double>(cfg, "params", "t0"), delta = param<double>(cfg, "params", "delta");
    const int J = param<int>(cfg, "params", "J");
    auto p = heat(1, t0 + delta);
    p.output_times = {t0 - delta, t0, t0 + delta};
    auto s = solve(p);
    auto L = derivative_ladder(p, s.frames[2], t0, J);
    double worst = 0;
    for (int side : {1, 3}) worst = std::max(worst, (taylor_reconstruct(L, delta, s.times[side], J) - s.frames[side]).max_abs());
    auto errs = taylor_errors(L, t0 + delta, s.frames[3]);
    CsvWriter taylor_csv(out / "taylor.csv", {"J", "reconstruction_error"});
    for (std::size_t j = 0; j < errs.size(); ++j) taylor_csv.row({std::to_string(j + 1), csv_number(errs[j])});
    r.reports.push_back("taylor.csv");
    r.criteria.push_back({5, "Taylor reconstruction", worst <= tolerance(cfg, "taylor"),
                          fmt("max error %.3e over t0 +- %g with J = %g", worst, delta, J)});
    return r;
}

// ---- kernel-scaling --------------------------------------------------------------

ExperimentResult run_kernel_scaling(const Json& cfg, std::uint64_t seed, const std::filesystem::path& out) {
    ExperimentResult r;
    const int n = cfg.value("n", 2);
    const Json& P = section(cfg, "params");
    const auto gamma_times = P.at("gamma_times").get<std::vector<double>>();
    const auto scan_times = P.at("scan_times").get<std::vector<double>>();
    const auto heights = P.at("gstar_heights").get<std::vector<double>>();
    const auto window = P.at("slope_window").get<std::vector<double>>();
    const Json& probe = P.at("ktilde_probe");

    CsvWriter csv(out / "kernel_l1.csv", {"kernel", "x_n", "t", "value", "slope"});
    std::vector<double> gamma(gamma_times.size());
    parallel_for(static_cast<int>(gamma_times.size()), [&](int i) { gamma[i] = l1_norm_y(L1Kernel::Gamma, gamma_times[i], 0, n); });
    double gamma_dev = 0;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        gamma_dev = std::max(gamma_dev, std::abs(gamma[i] - 1));
        csv.row({"Gamma", "0", csv_number(gamma_times[i]), csv_number(gamma[i]), ""});
    }

    std::vector<double> grad(scan_times.size());
    parallel_for(static_cast<int>(scan_times.size()), [&](int i) { grad[i] = l1_norm_y(L1Kernel::Gamma, scan_times[i], 0, n, 0, 1); });
    const double grad_slope = loglog_slope(scan_times, grad);
    for (std::size_t i = 0; i < grad.size(); ++i)
        csv.row({"gradGamma", "0", csv_number(scan_times[i]), csv_number(grad[i]), csv_number(grad_slope)});

    std::vector<std::vector<double>> gs(heights.size(), std::vector<double>(scan_times.size()));
    parallel_for(static_cast<int>(heights.size() * scan_times.size()), [&](int idx) {
        const std::size_t a = idx / scan_times.size(), b = idx % scan_times.size();
        gs[a][b] = l1_norm_y(L1Kernel::Gstar, scan_times[b], heights[a], n);
    });
    double gstar_ratio = 0;
    for (std::size_t a = 0; a < heights.size(); ++a) {
        auto [lo, hi] = std::minmax_element(gs[a].begin(), gs[a].end());
        gstar_ratio = std::max(gstar_ratio, *hi / *lo);
        for (std::size_t b = 0; b < scan_times.size(); ++b)
            csv.row({"Gstar", csv_number(heights[a]), csv_number(scan_times[b]), csv_number(gs[a][b]), ""});
    }

    ProbeGrid pg;
    pg.h = probe.at("h").get<double>();
    pg.tangential = probe.at("tangential").get<double>();
    pg.normal = probe.at("normal").get<double>();
    auto kc = measure_kernel_constants(n, pg, probe.at("x_n").get<double>(), probe.at("times").get<std::vector<double>>());
    for (std::size_t i = 0; i < kc.times.size(); ++i)
        csv.row({"Ktilde", csv_number(kc.x_n), csv_number(kc.times[i]), csv_number(kc.values[i].ktilde), csv_number(kc.slope)});
    r.reports.push_back("kernel_l1.csv");

    auto in_window = [&](double s) { return s >= window[0] && s <= window[1]; };
    const bool ok6 = gamma_dev <= tolerance(cfg, "gamma_l1") && in_window(grad_slope) && in_window(kc.slope) &&
                     gstar_ratio <= tolerance(cfg, "gstar_ratio");
    r.criteria.push_back({6, "kernel normalization and scaling", ok6,
                          fmt("|Gamma L1 - 1| <= %.2e; grad slope %.4f; Ktilde slope %.4f; G* max/min %.3f", gamma_dev, grad_slope,
                              kc.slope, gstar_ratio)});

    // Pointwise envelopes over random samples.
    const int samples = P.at("samples").get<int>();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> T(0.05, 1.0), W(-1.0, 1.0), H(0.05, 1.5);
    struct Sample { double t; Point x, y; int i, j, q; };
    std::vector<Sample> S(samples);
    for (auto& s : S) {
        s.t = T(rng);
        s.x = {W(rng), W(rng), W(rng)};
        s.y = {W(rng), W(rng), W(rng)};
        for (int k = n; k < 3; ++k) s.x[k] = s.y[k] = 0;
        s.x[n - 1] = H(rng);
        s.y[n - 1] = H(rng);
        // G_{beta n} and K_{beta n q} vanish identically for beta < n.
        do {
            s.i = static_cast<int>(rng() % n);
            s.j = static_cast<int>(rng() % n);
        } while (s.i < n - 1 && s.j == n - 1);
        s.q = static_cast<int>(rng() % n);
    }
    std::vector<double> gv(samples), gb(samples), gz(samples), kv(samples), kb(samples);
    parallel_for(samples, [&](int k) {
        const Sample& s = S[k];
        double d2 = 0, ds2 = 0;
        for (int c = 0; c < n; ++c) {
            double ys = c == n - 1 ? -s.y[c] : s.y[c];
            d2 += (s.x[c] - s.y[c]) * (s.x[c] - s.y[c]);
            ds2 += (s.x[c] - ys) * (s.x[c] - ys);
        }
        gv[k] = std::abs(eval_G(s.t, s.x, s.y, s.i, s.j, n).gstar);
        gb[k] = std::pow(ds2 + s.t, -n / 2.0);
        gz[k] = s.y[n - 1] * s.y[n - 1] / s.t;
        kv[k] = std::abs(eval_K(s.t, s.x, s.y, s.i, s.j, s.q, n).value);
        kb[k] = std::pow(d2 + s.t, -(n - 1) / 2.0);
    });
    auto ge = fit_pointwise_envelope(gv, gb, gz, true);
    auto ke = fit_pointwise_envelope(kv, kb, gz, false);
    CsvWriter env(out / "envelopes.csv", {"kernel", "samples", "C_fit", "c_fit", "residual", "max_excess"});
    env.row({"Gstar", std::to_string(ge.samples), csv_number(ge.C), csv_number(ge.c), csv_number(ge.residual), csv_number(ge.max_excess)});
    env.row({"K", std::to_string(ke.samples), csv_number(ke.C), csv_number(ke.c), csv_number(ke.residual), csv_number(ke.max_excess)});
    r.reports.push_back("envelopes.csv");
    const bool ok7 = std::isfinite(ge.C) && ge.C > 0 && ge.c > 0 && ge.max_excess <= 1 + 1e-12 && std::isfinite(ke.C) && ke.C > 0 &&
                     ke.max_excess <= 1 + 1e-12;
    r.criteria.push_back({7, "envelope fits", ok7,
                          fmt("G*: C_fit %.4g, c_fit %.4g; K: C_fit %.4g; max excess %.6f", ge.C, ge.c, ke.C, std::max(ge.max_excess, ke.max_excess))});
    return r;
}

// ---- projection-residual -------------------------------------------------------------

ExperimentResult run_projection(const Json& cfg, std::uint64_t seed, const std::filesystem::path& out) {
    ExperimentResult r;
    Grid g = grid_from_json(cfg.at("grid"));
    const int n = g.dim(), count = param<int>(cfg, "params", "count");
    std::vector<double> res(count), row(count);
    parallel_for(count, [&](int s) {
        TensorField F = gaussian_tensor(g, seed + s, 1.0);
        TensorField Fp = project_F(F);
        VectorField div = tensor_divergence(F);
        res[s] = rel_l2(tensor_divergence(Fp), helmholtz_decompose(div).qf);
        double worst = 0;
        for (int m = 0; m < n; ++m)
            for (std::size_t node = 0; node < g.size(); ++node) {
                const double v = F.at(node, n - 1, m) - (m == n - 1 ? F.at(node, n - 1, n - 1) : 0.0);
                worst = std::max(worst, std::abs(Fp.at(node, n - 1, m) - v));
            }
        row[s] = worst / F.max_abs();
    });
    CsvWriter csv(out / "projection.csv", {"sample", "residual", "row_identity"});
    for (int s = 0; s < count; ++s) csv.row({std::to_string(s), csv_number(res[s]), csv_number(row[s])});
    r.reports.push_back("projection.csv");
    const double worst = *std::max_element(res.begin(), res.end()), worst_row = *std::max_element(row.begin(), row.end());
    r.criteria.push_back({8, "projection identity", worst <= tolerance(cfg, "residual") && worst_row <= tolerance(cfg, "row_identity"),
                          fmt("max relative residual %.3e over %g samples; normal-row identity %.2e", worst, count, worst_row)});
    return r;
}

// ---- ns-shear --------------------------------------------------------------------------

bool contraction_ok(const PicardResult& res, double ratio, double residual, double tol) {
    if (!res.converged || res.residual > residual * tol) return false;
    for (std::size_t m = 1; m < res.states.size(); ++m)
        if (res.states[m].ratio > ratio) return false;
    return true;
}

ExperimentResult run_ns_shear(const Json& cfg, std::uint64_t seed, const std::filesystem::path& base, const std::filesystem::path& out) {
    ExperimentResult r;
    const double ratio = tolerance(cfg, "ratio"), factor = tolerance(cfg, "residual_factor");
    MildProblem p = mild_problem_from_json(cfg, base);
    auto res = picard_solve(p);
    write_picard_csv(out / "picard.csv", res.states);
    write_series(out / "series", res.u);
    r.reports.push_back("picard.csv");
    r.reports.push_back("series");
    bool ok = contraction_ok(res, ratio, factor, p.tol);
    double worst_ratio = 0;
    for (std::size_t m = 1; m < res.states.size(); ++m) worst_ratio = std::max(worst_ratio, res.states[m].ratio);

    const Json& P = section(cfg, "params");
    const int count = P.at("random_problems").get<int>();
    Grid rg = grid_from_json(P.at("random_grid"));
    std::vector<PicardResult> rr(count);
    std::vector<MildProblem> rp(count);
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(seed + 101 * i);
        std::uniform_real_distribution<double> u(-1, 1);
        const double cx = rg.origin(0) + rg.extent(0) * (0.5 + 0.05 * u(rng));
        rp[i].u0 = stream_field(rg, 0.03 * (0.5 + 0.25 * (1 + u(rng))), {cx, 1.0 + 0.1 * u(rng), 0}, 0.35);
        auto F0 = gaussian_tensor(rg, seed + 7 * i + 1, 0.02);
        const double w = 2 + u(rng);
        rp[i].F = [F0, w](double t) { return std::cos(w * t) * F0; };
        rp[i].T = p.T;
        rp[i].time_nodes = P.at("random_nodes").get<int>();
        rp[i].tol = p.tol;
        rp[i].constants = p.constants;
    }
    parallel_for(count, [&](int i) { rr[i] = picard_solve(rp[i]); });
    for (int i = 0; i < count; ++i) {
        const std::string name = "picard_random_" + std::to_string(i) + ".csv";
        write_picard_csv(out / name, rr[i].states);
        r.reports.push_back(name);
        ok = ok && contraction_ok(rr[i], ratio, factor, p.tol);
        for (std::size_t m = 1; m < rr[i].states.size(); ++m) worst_ratio = std::max(worst_ratio, rr[i].states[m].ratio);
    }
    r.criteria.push_back({9, "Picard contraction", ok,
                          fmt("shear plus %g random problems; max successive ratio %.3e; smallness lhs %.3f", count, worst_ratio, res.smallness.lhs)});
    return r;
}

// ---- envelope ----------------------------------------------------------------------------

ExperimentResult run_envelope(const Json& cfg, std::uint64_t, const std::filesystem::path& base, const std::filesystem::path& out) {
    ExperimentResult r;
    MildProblem p = mild_problem_from_json(cfg, base);
    auto res = picard_solve(p);
    const auto window = param<std::vector<double>>(cfg, "time", "window");
    const int samples = param<int>(cfg, "time", "samples");
    auto times = chebyshev_nodes(window[0], window[1], samples);
    std::reverse(times.begin(), times.end());
    auto u = evaluate_mild(p, res, times);
    u.kind = NodeKind::Chebyshev;
    write_series(out / "series", u);
    r.reports.push_back("series");

    const Json& u0 = section(section(cfg, "data"), "u0");
    std::string oracle = "no closed form for this initial data";
    bool oracle_ok = true;
    if (u0.value("generator", "") == "shear") {
        const double A = u0.value("amplitude", 0.15), sigma = u0.value("sigma", 0.1);
        double worst = 0;
        CsvWriter csv(out / "oracle.csv", {"t", "rel_error"});
        for (std::size_t i = 0; i < u.size(); ++i) {
            auto ex = shear_field(u.frames[i].grid(), A, sigma, u.times[i]);
            double e = (u.frames[i] - ex).max_abs() / ex.max_abs();
            worst = std::max(worst, e);
            csv.row({csv_number(u.times[i]), csv_number(e)});
        }
        r.reports.push_back("oracle.csv");
        oracle_ok = worst <= tolerance(cfg, "oracle");
        oracle = fmt("max relative error against the images heat solution %.3e", worst);
    }

    const int kmax = param<int>(cfg, "params", "kmax"), kcmp = param<int>(cfg, "params", "kmax_compare");
    auto rep = analyze_series(u, kmax);
    write_envelope_csv(out / "envelope.csv", rep);
    r.reports.push_back("envelope.csv");
    const bool full = rep.k_max >= kmax && kcmp <= rep.k_max;
    const double Mc = full ? rep.envelope.prefix_M[kcmp] : NAN, Mf = rep.envelope.M;
    const double spread = std::abs(Mf - Mc) / Mc;
    const double need = tolerance(cfg, "radius_factor") / (std::exp(1.0) * Mf);
    const bool ok = oracle_ok && full && std::isfinite(Mf) && rep.envelope.pass && spread <= tolerance(cfg, "stability") &&
                    rep.radius.delta >= need;
    r.criteria.push_back({10, "end-to-end oracle and envelope", ok,
                          oracle + fmt("; M_fit %.4f (k <= %g: %.4f); delta/t0 %.3f", Mf, kcmp, Mc, rep.radius.delta) +
                              (rep.radius.capped ? " (capped)" : "") + fmt(" >= %.3f required", need)});
    return r;
}

Json grid_json(double h, std::vector<double> extent, std::vector<bool> periodic, std::vector<double> origin = {0, 0}) {
    return {{"n", 2}, {"h", h}, {"origin", origin}, {"extent", extent}, {"halfspace", true}, {"periodic", periodic}};
}

std::vector<CatalogEntry> make_catalog() {
    const Json shear = {{"generator", "shear"}, {"amplitude", 0.15}, {"sigma", 0.1}};
    const Json constants = {{"C", 2.2}, {"C0", 1.2}};
    std::vector<CatalogEntry> c;
    c.push_back({"extension-equivalence", "half-space Dirichlet and conormal heat solves, direct vs via extension", {3},
                 {{"id", "extension-equivalence"},
                  {"grid", grid_json(1.0 / 64, {4, 2}, {false, false}, {-2, 0})},
                  {"time", {{"t_end", 0.05}, {"dt", 1e-4}, {"outputs", 5}}},
                  {"tolerances", {{"rel_linf", 1e-3}}}}});
    c.push_back({"heat-ladder", "derivative ladder growth of heat modes and Taylor reconstruction", {4, 5},
                 {{"id", "heat-ladder"},
                  {"grid", {{"cells", 16}}},
                  {"time", {{"dt", 1e-3}}},
                  {"params", {{"modes", {1, 2}}, {"kmax", 10}, {"t0", 1.0}, {"delta", 0.3}, {"J", 10}}},
                  {"tolerances", {{"rate_rel", 0.1}, {"taylor", 1e-6}}}}});
    c.push_back({"kernel-scaling", "L1 normalization and t^{-1/2} scaling of the kernels, pointwise envelopes", {6, 7},
                 {{"id", "kernel-scaling"},
                  {"n", 2},
                  {"params",
                   {{"gamma_times", {0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0}},
                    {"scan_times", {1.0, 0.5, 0.25, 0.125}},
                    {"gstar_heights", {0.1, 1.0, 10.0}},
                    {"slope_window", {-0.6, -0.4}},
                    {"ktilde_probe", {{"h", 1.0 / 32}, {"tangential", 8}, {"normal", 4}, {"x_n", 2.0}, {"times", {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}}}},
                    {"samples", 100}}},
                  {"tolerances", {{"gamma_l1", 1e-6}, {"gstar_ratio", 10}}}}});
    c.push_back({"projection-residual", "div F' against Q(div F) on random admissible tensors", {8},
                 {{"id", "projection-residual"},
                  {"grid", grid_json(1.0 / 64, {4, 4}, {true, false})},
                  {"params", {{"count", 10}}},
                  {"tolerances", {{"residual", 2e-2}, {"row_identity", 1e-12}}}}});
    c.push_back({"ns-shear", "Picard iteration for the mild Navier-Stokes solution: shear flow and random small data", {9},
                 {{"id", "ns-shear"},
                  {"grid", grid_json(1.0 / 32, {0.125, 4}, {true, false})},
                  {"time", {{"T", 0.2}, {"nodes", 24}}},
                  {"data", {{"u0", shear}}},
                  {"constants", constants},
                  {"params", {{"random_problems", 5}, {"random_grid", grid_json(1.0 / 16, {4, 4}, {true, false})}, {"random_nodes", 12}}},
                  {"tolerances", {{"picard", 1e-10}, {"ratio", 0.6}, {"residual_factor", 2}}}}});
    c.push_back({"lemmas", "exact Leibniz and shift identities, combinatorial sum ratio", {1, 2},
                 {{"id", "lemmas"}, {"n", 2}, {"params", {{"trials", 200}, {"kmax", 400}}}, {"tolerances", {{"sup_stability", 0.01}}}}});
    c.push_back({"envelope", "shear-flow oracle, time-derivative envelope and radius estimate", {10},
                 {{"id", "envelope"},
                  {"grid", grid_json(1.0 / 64, {0.0625, 4}, {true, false})},
                  {"time", {{"T", 0.2}, {"nodes", 24}, {"window", {0.05, 0.2}}, {"samples", 24}}},
                  {"data", {{"u0", shear}}},
                  {"constants", constants},
                  {"params", {{"kmax", 8}, {"kmax_compare", 6}}},
                  {"tolerances", {{"picard", 1e-10}, {"oracle", 2e-2}, {"stability", 0.2}, {"radius_factor", 0.5}}}}});
    return c;
}

}  // namespace

const std::vector<CatalogEntry>& experiment_catalog() {
    static const std::vector<CatalogEntry> catalog = make_catalog();
    return catalog;
}

ExperimentResult run_experiment(const Json& config, std::uint64_t seed, const std::filesystem::path& base, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    const std::string id = config.at("id").get<std::string>();
    ExperimentResult r;
    try {
        if (id == "lemmas") r = run_lemmas(config, seed, out);
        else if (id == "extension-equivalence") r = run_extension(config, seed, out);
        else if (id == "heat-ladder") r = run_heat_ladder(config, seed, out);
        else if (id == "kernel-scaling") r = run_kernel_scaling(config, seed, out);
        else if (id == "projection-residual") r = run_projection(config, seed, out);
        else if (id == "ns-shear") r = run_ns_shear(config, seed, base, out);
        else if (id == "envelope") r = run_envelope(config, seed, base, out);
        else throw ConfigError("unknown experiment: " + id);
    } catch (const Json::exception& ex) {
        throw ConfigError("invalid parameters for " + id + ": " + ex.what());
    }
    r.id = id;
    return r;
}

}  // namespace lab
