#include "lab/parabolic.hpp"

#include "lab/numerics.hpp"

#include <Eigen/SparseLU>

#include <map>
#include <memory>

namespace lab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

Eigen::Map<const Vec> view(const ScalarField& u) {
    return Eigen::Map<const Vec>(u.values().data(), static_cast<Eigen::Index>(u.size()));
}

ScalarField to_field(const Grid& g, const Vec& v) { return ScalarField(g, std::vector<double>(v.data(), v.data() + v.size())); }

// Rows marked inactive hold `pinned` (NaN: keep the current value).
struct System {
    Grid grid;
    SpMat A;
    std::vector<bool> active;
    std::vector<double> pinned;
    std::function<Vec(double)> source;  // ∂_i f_i on active rows
};

void validate(const ParabolicProblem& p) {
    const Grid& g = p.u_init.grid();
    if (!p.a.grid().same_as(g)) throw Error("grid mismatch");
    if (!(p.dt > 0)) throw Error("time step must be positive");
    if (!(p.t_end > p.t_start)) throw Error("t_end must exceed t_start");
    if (p.theta < 0 || p.theta > 1) throw Error("theta must lie in [0, 1]");
    if (!p.u_init.all_finite()) throw Error("initial data is not finite");
    CoefficientAudit au = audit_coefficients(p.a);
    if (!(au.lambda_min > 0)) throw Error("coefficients are not uniformly elliptic (lambda_min <= 0)");
    if (p.theta == 0.0) {
        double limit = g.h() * g.h() / (2.0 * g.dim() * au.Lambda_max);
        if (p.dt > limit) throw Error("stability violation: explicit dt exceeds h^2/(2 n Lambda) = " + std::to_string(limit));
    }
}

std::vector<double> output_schedule(const ParabolicProblem& p) {
    std::vector<double> out;
    for (double t : p.output_times)
        if (t > p.t_start && t <= p.t_end * (1 + 1e-14)) out.push_back(std::min(t, p.t_end));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ScalarSeries march(const System& sys, const ParabolicProblem& p) {
    const Grid& g = sys.grid;
    const auto N = static_cast<Eigen::Index>(g.size());
    const double theta = p.theta;
    Vec u = view(p.u_init);
    for (Eigen::Index k = 0; k < N; ++k)
        if (!sys.active[k] && !std::isnan(sys.pinned[k])) u[k] = sys.pinned[k];

    std::vector<double> targets = output_schedule(p);
    const bool every_step = p.output_times.empty();
    if (every_step || targets.empty() || targets.back() < p.t_end) targets.push_back(p.t_end);

    std::map<double, std::unique_ptr<Eigen::SparseLU<SpMat>>> cache;
    auto factor = [&](double step) -> Eigen::SparseLU<SpMat>& {
        auto it = cache.find(step);
        if (it != cache.end()) return *it->second;
        SpMat I(N, N);
        I.setIdentity();
        SpMat M = I - (theta * step) * sys.A;
        M.makeCompressed();
        auto lu = std::make_unique<Eigen::SparseLU<SpMat>>();
        lu->analyzePattern(M);
        lu->factorize(M);
        if (lu->info() != Eigen::Success) throw Error("theta-scheme matrix factorization failed");
        return *cache.emplace(step, std::move(lu)).first->second;
    };

    ScalarSeries out;
    out.kind = NodeKind::Uniform;
    out.push(p.t_start, to_field(g, u));
    double ref = u.cwiseAbs().maxCoeff();
    double t = p.t_start;
    std::size_t next = 0;
    Vec b_now = sys.source ? sys.source(t) : Vec::Zero(N);
    while (next < targets.size()) {
        double target = targets[next];
        double step = p.dt;
        bool hit = false;
        if (target - t <= p.dt * (1 + 1e-9)) {
            step = target - t;
            hit = true;
        }
        Vec b_next = sys.source ? sys.source(t + step) : Vec::Zero(N);
        Vec rhs = u;
        if (theta < 1.0) rhs += ((1 - theta) * step) * (sys.A * u);
        rhs += step * (theta * b_next + (1 - theta) * b_now);
        for (Eigen::Index k = 0; k < N; ++k)
            if (!sys.active[k]) rhs[k] = std::isnan(sys.pinned[k]) ? u[k] : sys.pinned[k];
        u = theta > 0 ? Vec(factor(step).solve(rhs)) : rhs;
        t = hit ? target : t + step;
        b_now = std::move(b_next);

        double m = u.cwiseAbs().maxCoeff();
        if (!std::isfinite(m) || (ref > 0 && m > 1e6 * ref))
            throw Error("divergence detected: solution norm grew beyond 1e6 times its initial size at t = " + std::to_string(t));
        if (ref == 0) ref = m;
        if (every_step || hit) out.push(t, to_field(g, u));
        if (hit) ++next;
    }
    return out;
}

}  // namespace

ScalarSeries solve(const ParabolicProblem& p) {
    validate(p);
    const Grid& g = p.u_init.grid();
    if (g.halfspace()) throw Error("half-space grid passed to solve; extend the problem or use solve_halfspace");
    System sys;
    sys.grid = g;
    sys.A = assemble_divergence_operator(p.a, &sys.active);
    sys.pinned.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
    if (p.f) {
        sys.source = [&p, active = sys.active](double t) {
            ScalarField d = discrete_divergence(p.f(t, 0));
            Vec v = view(d);
            for (std::size_t k = 0; k < active.size(); ++k)
                if (!active[k]) v[static_cast<Eigen::Index>(k)] = 0;
            return v;
        };
    }
    return march(sys, p);
}

ScalarSeries solve_halfspace(const ParabolicProblem& p, BoundaryMode mode) {
    validate(p);
    const Grid& g = p.u_init.grid();
    if (!g.halfspace()) throw Error("solve_halfspace needs a half-space grid");
    const int n = g.dim();
    const int zero = g.nodes(n - 1) - 1;  // interface index on the mirrored grid
    Grid w = g.mirrored();
    TensorField aw = extend_coefficients(p.a);
    std::vector<bool> wactive;
    Eigen::SparseMatrix<double, Eigen::RowMajor> Aw = assemble_divergence_operator(aw, &wactive);

    auto whole_of = [&](std::size_t kh) {
        Index idx = g.unravel(kh);
        idx[n - 1] += zero;
        return w.ravel(idx);
    };
    auto fold = [&](std::size_t kw, int& sign) {
        Index idx = w.unravel(kw);
        int m = idx[n - 1] - zero;
        sign = (m < 0 && mode == BoundaryMode::Dirichlet) ? -1 : 1;
        idx[n - 1] = std::abs(m);
        return g.ravel(idx);
    };

    System sys;
    sys.grid = g;
    sys.active.assign(g.size(), false);
    sys.pinned.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t kh = 0; kh < g.size(); ++kh) {
        int j = g.unravel(kh)[n - 1];
        std::size_t kw = whole_of(kh);
        if (j == 0 && mode == BoundaryMode::Dirichlet) {
            sys.pinned[kh] = 0.0;
            continue;
        }
        if (!wactive[kw]) continue;
        sys.active[kh] = true;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Aw, static_cast<Eigen::Index>(kw)); it; ++it) {
            int sign;
            std::size_t c = fold(static_cast<std::size_t>(it.col()), sign);
            trips.emplace_back(static_cast<int>(kh), static_cast<int>(c), sign * it.value());
        }
    }
    sys.A.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
    sys.A.setFromTriplets(trips.begin(), trips.end());
    if (p.f) {
        sys.source = [&p, &g, mode, active = sys.active](double t) {
            ScalarField dw = discrete_divergence(extend_flux(p.f(t, 0), mode));
            ScalarField d = restrict_to_halfspace(dw, g);
            Vec v = view(d);
            for (std::size_t k = 0; k < active.size(); ++k)
                if (!active[k]) v[static_cast<Eigen::Index>(k)] = 0;
            return v;
        };
    }
    return march(sys, p);
}

DerivativeLadder derivative_ladder(const ParabolicProblem& p, const ScalarField& u_t0, double t0, int k_max) {
    if (k_max < 0) throw Error("k_max must be nonnegative");
    const Grid& g = u_t0.grid();
    if (!p.a.grid().same_as(g)) throw Error("grid mismatch");
    DerivativeLadder L;
    L.t0 = t0;
    L.margin = 2.0 * k_max * g.h();
    for (int a = 0; a < g.dim(); ++a)
        if (!g.periodic(a) && g.extent(a) <= 2 * L.margin)
            throw Error("ladder depth exceeds grid margin: need 2*k_max*h = " + std::to_string(L.margin) +
                        " clear of every bounded face");
    L.d.push_back(u_t0);
    for (int k = 1; k <= k_max; ++k) {
        ScalarField next;
        if (p.f) {
            VectorField fk = p.f(t0, k - 1);
            next = apply_divergence_form(p.a, L.d.back(), &fk);
        } else {
            next = apply_divergence_form(p.a, L.d.back());
        }
        L.d.push_back(std::move(next));
    }
    return L;
}

namespace {

double flux_norm(const VectorSeries* f, double ta, double tb, const Point& x0, double r, NormKind kind) {
    if (!f) return 0.0;
    double s = 0.0;
    for (int i = 0; i < f->frames.front().grid().dim(); ++i) s += space_time_norm(component_series(*f, i), ta, tb, x0, r, kind);
    return s;
}

ScalarSeries gradient_magnitude(const ScalarSeries& u) {
    VectorSeries g;
    for (std::size_t s = 0; s < u.size(); ++s) g.push(u.times[s], gradient(u.frames[s]));
    return magnitude_series(g);
}

template <class F>
TimeSeries<F> time_derivative(const TimeSeries<F>& u) {
    if (u.size() < 2) throw Error("time derivative needs at least two snapshots");
    TimeSeries<F> d;
    d.kind = u.kind;
    for (std::size_t s = 0; s < u.size(); ++s) {
        std::size_t lo = s == 0 ? 0 : s - 1, hi = s + 1 == u.size() ? s : s + 1;
        d.push(u.times[s], (1.0 / (u.times[hi] - u.times[lo])) * (u.frames[hi] - u.frames[lo]));
    }
    return d;
}

}  // namespace

double audit_caccioppoli(const ScalarSeries& u, const VectorSeries* f, double r, double R, double t0, const Point& x0) {
    if (!(r > 0 && R > r)) throw Error("audit needs 0 < r < R");
    double num = cylinder_norm(gradient_magnitude(u), Cylinder{t0, x0, r}, NormKind::L2);
    double den = cylinder_norm(u, Cylinder{t0, x0, R}, NormKind::L2) / (R - r) +
                 flux_norm(f, t0 - R * R, t0, x0, R, NormKind::L2);
    return den > 0 ? num / den : 0.0;
}

double audit_local_boundedness(const ScalarSeries& u, const VectorSeries* f, double R, double t0, const Point& x0, double p) {
    if (!(R > 0)) throw Error("audit needs R > 0");
    const int n = u.frames.front().grid().dim();
    NormKind fk;
    double fexp;
    if (std::isinf(p)) {
        fk = NormKind::Linf;
        fexp = 1.0;
    } else if (p == 2.0) {
        fk = NormKind::L2;
        fexp = 1.0 - (n + 2) / 2.0;
    } else {
        throw Error("unsupported exponent p (use 2 or inf)");
    }
    double num = cylinder_norm(u, Cylinder{t0, x0, R / 2}, NormKind::Linf);
    double den = std::pow(R, -1.0 - n / 2.0) * cylinder_norm(u, Cylinder{t0, x0, R}, NormKind::L2) +
                 std::pow(R, fexp) * flux_norm(f, t0 - R * R, t0, x0, R, fk);
    return den > 0 ? num / den : 0.0;
}

double audit_time_derivative(const ScalarSeries& u, const VectorSeries* f, double S, double T, const Point& x0, double r,
                             double delta) {
    if (!(delta > 0)) throw Error("delta must be positive");
    double num = space_time_norm(time_derivative(u), S, T, x0, r, NormKind::L2);
    const double Sd = S - delta * delta, rd = r + delta;
    double den = space_time_norm(gradient_magnitude(u), Sd, T, x0, rd, NormKind::L2) + flux_norm(f, Sd, T, x0, rd, NormKind::L2);
    den /= delta;
    if (f) {
        VectorSeries ft = time_derivative(*f);
        den += delta * flux_norm(&ft, Sd, T, x0, rd, NormKind::L2);
    }
    return den > 0 ? num / den : 0.0;
}

GrowthFit growth_fit(const std::vector<double>& values, const Point& x0, double A1, double A2) {
    if (!(A1 > 0)) throw Error("A1 must be positive");
    GrowthFit out;
    double logE = 0.0;
    for (double x : x0) logE += 2 * A2 * x * x;
    const double base = std::log(A1) + logE;
    auto kk = [](int k) { return k == 0 ? 0.0 : k * std::log(static_cast<double>(k)); };
    for (double v : values) {
        if (!std::isfinite(v)) throw Error("non-finite ladder entry");
        out.values.push_back(std::abs(v));
    }
    const int K = static_cast<int>(values.size()) - 1;

    double log_a3 = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= K; ++k)
        if (out.values[k] > 0) log_a3 = std::max(log_a3, (std::log(out.values[k]) - base - kk(k)) / (k + 1));
    out.a3 = std::exp(log_a3);

    double sxy = 0, sxx = 0;
    std::vector<double> ks, ls;
    for (int k = 1; k <= K; ++k) {
        if (out.values[k] <= 0) continue;
        double y = std::log(out.values[k]) - base - kk(k);
        sxy += (k + 1) * y;
        sxx += (k + 1.0) * (k + 1.0);
        ks.push_back(k);
        ls.push_back(std::log(out.values[k]));
    }
    out.a3_lsq = sxx > 0 ? std::exp(sxy / sxx) : 0.0;
    if (ks.size() >= 2) {
        double mk = 0, ml = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            mk += ks[i];
            ml += ls[i];
        }
        mk /= ks.size();
        ml /= ks.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            num += (ks[i] - mk) * (ls[i] - ml);
            den += (ks[i] - mk) * (ks[i] - mk);
        }
        out.a3_rate = std::exp(num / den);
    }
    for (int k = 0; k <= K; ++k)
        out.residuals.push_back(out.values[k] > 0 && out.a3 > 0
                                    ? std::log(out.values[k]) - (base + (k + 1) * std::log(out.a3) + kk(k))
                                    : -std::numeric_limits<double>::infinity());
    return out;
}

GrowthFit growth_fit(const DerivativeLadder& ladder, const Point& x0, double A1, double A2) {
    if (ladder.d.empty()) throw Error("empty ladder");
    const Grid& g = ladder.d.front().grid();
    Index idx{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) {
        long i = std::lround((x0[a] - g.origin(a)) / g.h());
        if (g.periodic(a)) {
            i %= g.nodes(a);
            if (i < 0) i += g.nodes(a);
        } else if (i < 0 || i >= g.nodes(a)) {
            throw Error("growth-fit point lies outside the grid");
        }
        idx[a] = static_cast<int>(i);
    }
    std::size_t node = g.ravel(idx);
    std::vector<double> v;
    for (const auto& d : ladder.d) v.push_back(d(node));
    return growth_fit(v, x0, A1, A2);
}

ScalarField taylor_reconstruct(const DerivativeLadder& ladder, double delta, double t, int J) {
    if (std::abs(t - ladder.t0) > delta * (1 + 1e-12)) throw Error("|t - t0| exceeds delta");
    if (J < 6) throw Error("Taylor reconstruction needs J >= 6");
    if (J > static_cast<int>(ladder.d.size())) throw Error("ladder shorter than J");
    const double s = t - ladder.t0;
    ScalarField sum = ladder.d[0];
    std::vector<double> norms{ladder.d[0].max_abs()};
    double c = 1.0;
    for (int j = 1; j < J; ++j) {
        c *= s / j;
        ScalarField term = c * ladder.d[j];
        norms.push_back(term.max_abs());
        sum = sum + term;
    }
    double last = norms[J - 1];
    if (last > norms[J - 2] && norms[J - 2] > norms[J - 3] && last > 1e-12 * sum.max_abs())
        throw Error("Taylor partial sums diverge: |t - t0| lies beyond the measured radius");
    return sum;
}

std::vector<double> taylor_errors(const DerivativeLadder& ladder, double t, const ScalarField& reference) {
    std::vector<double> out;
    ScalarField sum(reference.grid());
    double c = 1.0;
    for (std::size_t j = 0; j < ladder.d.size(); ++j) {
        if (j > 0) c *= (t - ladder.t0) / static_cast<double>(j);
        sum = sum + c * ladder.d[j];
        out.push_back((sum - reference).max_abs());
    }
    return out;
}

}  // namespace lab
