#include "lab/analyticity.hpp"
#include "lab/experiments.hpp"
#include "lab/extension.hpp"
#include "lab/kernels.hpp"
#include "lab/mild.hpp"
#include "lab/numerics.hpp"
#include "lab/parabolic.hpp"
#include "lab/projection.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace lab;

namespace {

// Raised when computed results violate a checked bound (exit code 1).
struct AssertionFailure : Error {
    using Error::Error;
};

Point to_point(const std::vector<double>& v) {
    if (v.empty() || v.size() > 3) throw ConfigError("points take 1 to 3 coordinates");
    Point p{0, 0, 0};
    for (std::size_t k = 0; k < v.size(); ++k) p[k] = v[k];
    return p;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_file(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw ConfigError("missing file: " + p.string());
}

ParabolicProblem heat_problem(const std::string& in, const std::string& coeff, double t_end, double dt) {
    require_file(in);
    ParabolicProblem p;
    p.u_init = read_field<Rank::Scalar>(in);
    if (coeff.empty()) {
        p.a = identity_coefficients(p.u_init.grid());
    } else {
        require_file(coeff);
        p.a = read_field<Rank::Tensor>(coeff);
        if (!p.a.grid().same_as(p.u_init.grid())) throw ConfigError("coefficient grid differs from the data grid");
    }
    p.t_end = t_end;
    p.dt = dt;
    return p;
}

ScalarSeries march(const ParabolicProblem& p, const std::string& mode) {
    if (p.u_init.grid().halfspace()) return solve_halfspace(p, parse_boundary_mode(mode));
    return solve(p);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analyticity lab: half-space parabolic and Stokes experiments"};
    app.require_subcommand(1);

    // run
    std::string run_config, run_out = "lab-out";
    auto* run_cmd = app.add_subcommand("run", "Run the experiments of a JSON configuration");
    run_cmd->add_option("config", run_config, "Configuration file")->required();
    run_cmd->add_option("--out", run_out, "Artifact directory");

    // list
    bool list_json = false;
    auto* list_cmd = app.add_subcommand("list", "Print the experiment catalog");
    list_cmd->add_flag("--json", list_json, "Machine-readable catalog");

    // extend
    std::string ext_mode, ext_in, ext_out;
    auto* extend_cmd = app.add_subcommand("extend", "Extend a half-space scalar field to the whole space");
    extend_cmd->add_option("--mode", ext_mode, "dirichlet or conormal")->required();
    extend_cmd->add_option("--in", ext_in)->required();
    extend_cmd->add_option("--out", ext_out)->required();

    // solve-heat
    std::string sh_in, sh_coeff, sh_out, sh_mode = "dirichlet";
    double sh_t = 1.0, sh_dt = 1e-3;
    int sh_outputs = 10;
    auto* heat_cmd = app.add_subcommand("solve-heat", "March a divergence-form parabolic problem");
    heat_cmd->add_option("--in", sh_in, "Initial data field")->required();
    heat_cmd->add_option("--coeff", sh_coeff, "Coefficient tensor field (default identity)");
    heat_cmd->add_option("--mode", sh_mode, "Boundary mode on half-space grids");
    heat_cmd->add_option("--t-end", sh_t);
    heat_cmd->add_option("--dt", sh_dt);
    heat_cmd->add_option("--outputs", sh_outputs, "Number of output frames");
    heat_cmd->add_option("--out", sh_out, "Series directory")->required();

    // ladder
    std::string ld_in, ld_coeff, ld_report = "ladder.csv";
    double ld_t0 = 0.0, ld_A1 = 1.0, ld_A2 = 0.0;
    int ld_kmax = 10;
    std::vector<double> ld_x0;
    auto* ladder_cmd = app.add_subcommand("ladder", "Time-derivative ladder and growth fit");
    ladder_cmd->add_option("--in", ld_in, "Solution field at t0")->required();
    ladder_cmd->add_option("--coeff", ld_coeff);
    ladder_cmd->add_option("--t0", ld_t0);
    ladder_cmd->add_option("--kmax", ld_kmax);
    ladder_cmd->add_option("--x0", ld_x0, "Evaluation point")->required()->delimiter(',');
    ladder_cmd->add_option("--A1", ld_A1);
    ladder_cmd->add_option("--A2", ld_A2);
    ladder_cmd->add_option("--report", ld_report);

    // audit
    std::string au_series;
    double au_t0 = 1.0, au_r = 0.25, au_R = 0.5;
    std::vector<double> au_x0;
    auto* audit_cmd = app.add_subcommand("audit", "Local energy, boundedness and time-derivative ratios");
    audit_cmd->add_option("--series", au_series)->required();
    audit_cmd->add_option("--x0", au_x0)->required()->delimiter(',');
    audit_cmd->add_option("--t0", au_t0);
    audit_cmd->add_option("--r", au_r);
    audit_cmd->add_option("--R", au_R);

    // taylor
    std::string ty_in, ty_coeff, ty_report = "taylor.csv";
    double ty_t0 = 1.0, ty_delta = 0.3, ty_dt = 1e-3;
    int ty_J = 10;
    auto* taylor_cmd = app.add_subcommand("taylor", "Taylor reconstruction against the marched solution");
    taylor_cmd->add_option("--in", ty_in, "Initial data at t = 0")->required();
    taylor_cmd->add_option("--coeff", ty_coeff);
    taylor_cmd->add_option("--t0", ty_t0);
    taylor_cmd->add_option("--delta", ty_delta);
    taylor_cmd->add_option("--dt", ty_dt);
    taylor_cmd->add_option("--J", ty_J);
    taylor_cmd->add_option("--report", ty_report);

    // kernel-eval
    std::string ke_kernel;
    double ke_t = 1.0;
    std::vector<double> ke_x, ke_y;
    int ke_s = 0, ke_n = 2, ke_i = 0, ke_j = 0, ke_q = 0;
    auto* keval_cmd = app.add_subcommand("kernel-eval", "Evaluate a kernel at one point");
    keval_cmd->add_option("--kernel", ke_kernel)->required()->check(CLI::IsMember({"E", "N", "Nminus", "Gamma", "G", "K"}));
    keval_cmd->add_option("--t", ke_t);
    keval_cmd->add_option("--x", ke_x)->required()->delimiter(',');
    keval_cmd->add_option("--y", ke_y)->delimiter(',');
    keval_cmd->add_option("--deriv", ke_s, "Time derivative order (Gamma)");
    keval_cmd->add_option("--n", ke_n)->check(CLI::Range(2, 3));
    keval_cmd->add_option("--i", ke_i);
    keval_cmd->add_option("--j", ke_j);
    keval_cmd->add_option("--q", ke_q);

    // kernel-l1
    std::string kl_kernel, kl_report;
    double kl_t = 1.0, kl_xn = 1.0;
    int kl_n = 2, kl_s = 0, kl_d = 0;
    bool kl_scan = false;
    auto* kl1_cmd = app.add_subcommand("kernel-l1", "L1 norms of kernels in y");
    kl1_cmd->add_option("--kernel", kl_kernel)->required()->check(CLI::IsMember({"Gamma", "Gstar", "Ktilde"}));
    kl1_cmd->add_option("--t", kl_t);
    kl1_cmd->add_option("--x-n", kl_xn);
    kl1_cmd->add_option("--n", kl_n)->check(CLI::Range(2, 3));
    kl1_cmd->add_option("--deriv", kl_s);
    kl1_cmd->add_option("--grad", kl_d);
    kl1_cmd->add_flag("--scan-t", kl_scan, "t in {1, 1/2, 1/4, 1/8} with the log-log slope");
    kl1_cmd->add_option("--report", kl_report, "CSV output (default stdout)");

    // project
    std::string pj_in, pj_out, pj_report;
    auto* project_cmd = app.add_subcommand("project", "Apply the projection F -> F'");
    project_cmd->add_option("--in", pj_in)->required();
    project_cmd->add_option("--out", pj_out)->required();
    project_cmd->add_option("--report", pj_report);

    // solve-ns
    std::string ns_config, ns_out, ns_report = "picard.csv";
    auto* ns_cmd = app.add_subcommand("solve-ns", "Picard iteration for the mild Navier-Stokes solution");
    ns_cmd->add_option("--config", ns_config)->required();
    ns_cmd->add_option("--out", ns_out)->required();
    ns_cmd->add_option("--report", ns_report);

    // verify-lemmas
    int vl_kmax = 400, vl_trials = 200;
    std::uint64_t vl_seed = 1;
    std::string vl_report;
    auto* lemmas_cmd = app.add_subcommand("verify-lemmas", "Exact lemma checks and the combinatorial sum ratio");
    lemmas_cmd->add_option("--kmax", vl_kmax)->check(CLI::Range(4, 100000));
    lemmas_cmd->add_option("--trials", vl_trials)->check(CLI::PositiveNumber);
    lemmas_cmd->add_option("--seed", vl_seed);
    lemmas_cmd->add_option("--report", vl_report);

    // analyticity
    std::string an_series, an_report = "envelope.csv", an_form = "Mk_k";
    int an_kmax = 8;
    auto* an_cmd = app.add_subcommand("analyticity", "Time-derivative envelope and radius estimate of a series");
    an_cmd->add_option("--series", an_series)->required();
    an_cmd->add_option("--kmax", an_kmax);
    an_cmd->add_option("--form", an_form);
    an_cmd->add_option("--report", an_report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run_cmd) {
            require_file(run_config);
            return run(load_run_config(run_config), run_out);
        }
        if (*list_cmd) {
            if (list_json) {
                std::cout << catalog_json().dump(2) << "\n";
            } else {
                for (const auto& e : experiment_catalog()) {
                    std::string crit;
                    for (int c : e.criteria) crit += (crit.empty() ? "" : ",") + std::to_string(c);
                    std::printf("%-22s [%s] %s\n", e.id.c_str(), crit.c_str(), e.description.c_str());
                }
            }
            return 0;
        }
        if (*extend_cmd) {
            require_file(ext_in);
            write_field(ext_out, extend_solution(read_field<Rank::Scalar>(ext_in), parse_boundary_mode(ext_mode)));
            return 0;
        }
        if (*heat_cmd) {
            auto p = heat_problem(sh_in, sh_coeff, sh_t, sh_dt);
            for (int k = 1; k <= sh_outputs; ++k) p.output_times.push_back(sh_t * k / sh_outputs);
            write_series(sh_out, march(p, sh_mode));
            return 0;
        }
        if (*ladder_cmd) {
            auto p = heat_problem(ld_in, ld_coeff, ld_t0 + 1.0, 1e-3);
            auto L = derivative_ladder(p, p.u_init, ld_t0, ld_kmax);
            auto fit = growth_fit(L, to_point(ld_x0), ld_A1, ld_A2);
            CsvWriter csv(ld_report, {"k", "abs_dk", "bound", "A3_fit"});
            const double x2 = to_point(ld_x0)[0] * to_point(ld_x0)[0] + to_point(ld_x0)[1] * to_point(ld_x0)[1] +
                              to_point(ld_x0)[2] * to_point(ld_x0)[2];
            for (int k = 0; k <= ld_kmax; ++k) {
                double bound = ld_A1 * std::pow(fit.a3, k + 1.0) * std::exp(2 * ld_A2 * x2) * (k == 0 ? 1.0 : std::pow(k, k));
                csv.row({std::to_string(k), csv_number(fit.values[k]), csv_number(bound), csv_number(fit.a3)});
            }
            std::printf("A3 %.6g  rate %.6g\n", fit.a3, fit.a3_rate);
            return 0;
        }
        if (*audit_cmd) {
            require_file(au_series);
            auto u = read_series<ScalarField>(au_series);
            const Point x0 = to_point(au_x0);
            std::printf("audit,ratio\n");
            std::printf("caccioppoli,%s\n", num(audit_caccioppoli(u, nullptr, au_r, au_R, au_t0, x0)).c_str());
            std::printf("local_boundedness,%s\n", num(audit_local_boundedness(u, nullptr, au_R, au_t0, x0)).c_str());
            std::printf("time_derivative,%s\n",
                        num(audit_time_derivative(u, nullptr, au_t0 - au_r * au_r, au_t0, x0, au_r, au_R - au_r)).c_str());
            return 0;
        }
        if (*taylor_cmd) {
            auto p = heat_problem(ty_in, ty_coeff, ty_t0 + ty_delta, ty_dt);
            p.output_times = {ty_t0, ty_t0 + ty_delta};
            auto s = march(p, "dirichlet");
            auto L = derivative_ladder(p, s.frames[1], ty_t0, ty_J);
            auto errs = taylor_errors(L, ty_t0 + ty_delta, s.frames[2]);
            CsvWriter csv(ty_report, {"J", "reconstruction_error"});
            for (std::size_t j = 0; j < errs.size(); ++j) csv.row({std::to_string(j + 1), csv_number(errs[j])});
            std::printf("error at J = %d: %.3e\n", ty_J, errs.back());
            return 0;
        }
        if (*keval_cmd) {
            const Point x = to_point(ke_x), y = ke_y.empty() ? Point{0, 0, 0} : to_point(ke_y);
            Point z{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
            double v = 0;
            if (ke_kernel == "E") v = eval_E(z, ke_n);
            else if (ke_kernel == "N") v = eval_N(x, y, ke_n, +1);
            else if (ke_kernel == "Nminus") v = eval_N(x, y, ke_n, -1);
            else if (ke_kernel == "Gamma") v = eval_Gamma(ke_t, z, ke_n, ke_s);
            else if (ke_kernel == "G") v = eval_G(ke_t, x, y, ke_i, ke_j, ke_n).value;
            else v = eval_K(ke_t, x, y, ke_i, ke_j, ke_q, ke_n).value;
            std::printf("%s\n", num(v).c_str());
            return 0;
        }
        if (*kl1_cmd) {
            auto norm = [&](double t) {
                if (kl_kernel == "Gamma") return l1_norm_y(L1Kernel::Gamma, t, kl_xn, kl_n, kl_s, kl_d);
                if (kl_kernel == "Gstar") return l1_norm_y(L1Kernel::Gstar, t, kl_xn, kl_n, kl_s, kl_d);
                return probe_kernel_l1(kl_n, t, kl_xn).ktilde;
            };
            ScalingScan scan = kl_scan ? scan_t(norm) : ScalingScan{{kl_t}, {norm(kl_t)}, NAN};
            std::ostringstream os;
            os << "t,value,slope\n";
            for (std::size_t k = 0; k < scan.t.size(); ++k) os << num(scan.t[k]) << "," << num(scan.value[k]) << "," << csv_number(scan.slope) << "\n";
            if (kl_report.empty()) std::cout << os.str();
            else std::ofstream(kl_report) << os.str();
            return 0;
        }
        if (*project_cmd) {
            require_file(pj_in);
            auto F = read_field<Rank::Tensor>(pj_in);
            auto Fp = project_F(F);
            write_field(pj_out, Fp);
            if (!pj_report.empty()) {
                auto qf = helmholtz_decompose(tensor_divergence(F)).qf;
                auto diff = tensor_divergence(Fp) - qf;
                double num2 = 0, den2 = 0;
                for (double v : diff.values()) num2 += v * v;
                for (double v : tensor_divergence(F).values()) den2 += v * v;
                CsvWriter csv(pj_report, {"quantity", "value"});
                csv.row({"div_residual_rel_l2", csv_number(den2 > 0 ? std::sqrt(num2 / den2) : std::sqrt(num2))});
                csv.row({"div_residual_linf", csv_number(diff.max_abs())});
            }
            return 0;
        }
        if (*ns_cmd) {
            require_file(ns_config);
            std::ifstream is(ns_config);
            Json doc;
            try {
                doc = Json::parse(is);
            } catch (const Json::exception& e) {
                throw ConfigError(ns_config + ": " + e.what());
            }
            const auto base = std::filesystem::path(ns_config).parent_path();
            // Catalog-style entries are merged over the defaults first.
            if (doc.is_object() && (doc.contains("id") || doc.contains("experiments"))) doc = parse_run_config(doc, base).experiments.at(0);
            MildProblem p;
            try {
                p = mild_problem_from_json(doc, base);
            } catch (const Json::exception& e) {
                throw ConfigError(ns_config + ": " + e.what());
            }
            auto r = picard_solve(p);
            write_series(ns_out, r.u);
            write_picard_csv(ns_report, r.states);
            std::printf("iterations %zu  residual %.3e  smallness %.3f\n", r.states.size(), r.residual, r.smallness.lhs);
            if (!r.converged) throw AssertionFailure("Picard iteration did not converge");
            return 0;
        }
        if (*lemmas_cmd) {
            auto rep = verify_lemmas(vl_trials, vl_seed);
            auto sweep = sum_ratio_sweep(vl_kmax);
            if (!vl_report.empty()) {
                CsvWriter csv(vl_report, {"k", "r_k"});
                for (int k = 2; k <= vl_kmax; ++k) csv.row({std::to_string(k), csv_number(sweep.r[k])});
            }
            const double rel = std::abs(sweep.sup - sweep.sup_half) / sweep.sup;
            std::printf("leibniz failures %d/%d  shift failures %d/%d\n", rep.leibniz_failures, vl_trials, rep.shift_failures, vl_trials);
            std::printf("sup r_k: k <= %d %.6f, k <= %d %.6f, relative difference %.4f\n", vl_kmax, sweep.sup, vl_kmax / 2,
                        sweep.sup_half, rel);
            if (!rep.ok()) throw AssertionFailure("exact lemma identity failed");
            if (rel > 0.01) throw AssertionFailure("sum ratio supremum not stable within 1%");
            return 0;
        }
        if (*an_cmd) {
            require_file(an_series);
            const auto form = parse_envelope_form(an_form);
            const bool scalar = field_file_components(an_series / std::filesystem::path("frame_0000.field")) == 1;
            auto r = scalar ? analyze_series(read_series<ScalarField>(an_series), an_kmax, form)
                            : analyze_series(read_series<VectorField>(an_series), an_kmax, form);
            write_envelope_csv(an_report, r);
            std::printf("M %.6g  delta/t0 %.4g%s  k_max %d\n", r.envelope.M, r.radius.delta, r.radius.capped ? " (capped)" : "", r.k_max);
            return 0;
        }
    } catch (const AssertionFailure& e) {
        std::fprintf(stderr, "lab: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "lab: %s\n", e.what());
        return 2;
    }
    return 2;
}
