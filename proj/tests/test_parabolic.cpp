#include "lab/extension.hpp"
#include "lab/numerics.hpp"
#include "lab/parabolic.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using namespace lab;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

constexpr double pi = std::numbers::pi;

// Periodic in both axes; the second axis is a thin 4-node strip.
Grid strip(int m) { return Grid::make(2, {0, 0, 0}, {2 * pi, 4 * (2 * pi / m), 0}, 2 * pi / m, false, {true, true, false}); }

ParabolicProblem heat(const Grid& g, std::function<double(const Point&)> u0, double t_end, double dt) {
    ParabolicProblem p;
    p.a = identity_coefficients(g);
    p.u_init = ScalarField::sample(g, u0);
    p.t_end = t_end;
    p.dt = dt;
    return p;
}

// Semi-discrete decay rate of sin(m x1) under the 3-point Laplacian.
double discrete_rate(int m, double h) { return (2 - 2 * std::cos(m * h)) / (h * h); }

}  // namespace

TEST_CASE("heat solves", "[parabolic]") {
    SECTION("zero and constant data are preserved") {
        Grid g = Grid::make(2, {-1, -1, 0}, {2, 2, 0}, 0.125);
        auto z = solve(heat(g, [](const Point&) { return 0.0; }, 0.2, 0.01));
        for (auto& f : z.frames) REQUIRE(f.max_abs() == 0.0);
        auto c = solve(heat(g, [](const Point&) { return 2.5; }, 0.2, 0.01));
        for (auto& f : c.frames)
            for (double v : f.values()) REQUIRE(v == Approx(2.5).margin(1e-12));
    }

    SECTION("periodic sine decays like exp(-t)") {
        Grid g = strip(128);
        auto s = solve(heat(g, [](const Point& x) { return std::sin(x[0]); }, 1.0, 1e-2));
        REQUIRE(s.times.back() == 1.0);
        auto exact = ScalarField::sample(g, [](const Point& x) { return std::exp(-1.0) * std::sin(x[0]); });
        REQUIRE((s.frames.back() - exact).max_abs() < 1e-3);
    }

    SECTION("Crank-Nicolson is second order in dt") {
        Grid g = strip(64);
        const double lam = discrete_rate(1, g.h());
        std::vector<double> err;
        for (double dt : {0.1, 0.05, 0.025}) {
            auto s = solve(heat(g, [](const Point& x) { return std::sin(x[0]); }, 1.0, dt));
            auto exact = ScalarField::sample(g, [&](const Point& x) { return std::exp(-lam) * std::sin(x[0]); });
            err.push_back((s.frames.back() - exact).max_abs());
        }
        REQUIRE(std::log2(err[0] / err[1]) > 1.9);
        REQUIRE(std::log2(err[1] / err[2]) > 1.9);
    }

    SECTION("output times are hit exactly") {
        Grid g = strip(32);
        auto p = heat(g, [](const Point& x) { return std::sin(x[0]); }, 0.5, 0.03);
        p.output_times = {0.1, 0.25, 0.5};
        auto s = solve(p);
        REQUIRE(s.times == std::vector<double>{0.0, 0.1, 0.25, 0.5});
    }

    SECTION("explicit step above the stability limit") {
        Grid g = strip(32);
        auto p = heat(g, [](const Point& x) { return std::sin(x[0]); }, 0.5, 0.1);
        p.theta = 0.0;
        REQUIRE_THROWS_WITH(solve(p), ContainsSubstring("stability violation"));
    }

    SECTION("runaway growth is reported") {
        Grid g = strip(32);
        auto p = heat(g, [](const Point& x) { return 1e-3 * std::sin(x[0]); }, 1.0, 0.01);
        p.f = [&g](double t, int) {
            return VectorField::sample(g, [t](const Point& x, int c) { return c == 0 ? 1e6 * std::exp(20 * t) * std::cos(x[0]) : 0.0; });
        };
        REQUIRE_THROWS_WITH(solve(p), ContainsSubstring("divergence detected"));
    }

    SECTION("forcing with a steady state") {
        // Δ sin(x1) + ∂_1(-cos x1) = 0
        Grid g = strip(64);
        auto p = heat(g, [](const Point& x) { return std::sin(x[0]); }, 0.5, 0.01);
        p.f = [&g](double, int m) {
            return VectorField::sample(g, [m](const Point& x, int c) { return c == 0 && m == 0 ? -std::cos(x[0]) : 0.0; });
        };
        auto s = solve(p);
        REQUIRE((s.frames.back() - p.u_init).max_abs() < 1e-3);
    }
}

TEST_CASE("half-space solves match extended whole-space solves", "[parabolic]") {
    Grid hg = Grid::make(2, {-2, 0, 0}, {4, 2, 0}, 1.0 / 16, true);
    for (auto mode : {BoundaryMode::Dirichlet, BoundaryMode::Conormal}) {
        auto u0 = [mode](const Point& x) {
            double bump = std::exp(-4 * (x[0] * x[0] + (x[1] - 0.5) * (x[1] - 0.5)));
            return mode == BoundaryMode::Dirichlet ? x[1] * bump : bump;
        };
        ParabolicProblem p = heat(hg, u0, 0.1, 1e-3);
        p.a = TensorField::sample(hg, [](const Point& x, int c) { return c == 1 || c == 2 ? 0.2 * std::exp(-x[0] * x[0]) : 1.0; });
        auto direct = solve_halfspace(p, mode);

        ParabolicProblem q = p;
        q.a = extend_coefficients(p.a);
        q.u_init = extend_solution(p.u_init, mode);
        auto via = solve(q);
        auto back = restrict_to_halfspace(via.frames.back(), hg);
        REQUIRE((back - direct.frames.back()).max_abs() < 1e-10 * direct.frames.back().max_abs());
    }
}

TEST_CASE("derivative ladder", "[parabolic]") {
    // Each ladder step amplifies rounding noise by up to 4n/h², so deep ladders need coarse grids.
    Grid g = strip(16);
    auto p = heat(g, [](const Point& x) { return std::sin(x[0]); }, 1.0, 1e-2);

    SECTION("sine mode alternates in sign") {
        auto L = derivative_ladder(p, p.u_init, 0.0, 6);
        std::size_t node = g.ravel({4, 0, 0});  // x1 = π/2
        for (int k = 0; k <= 6; ++k) REQUIRE(L.d[k](node) == Approx(std::pow(-1.0, k)).margin(k * g.h() * g.h()));
    }

    SECTION("constants and depth zero") {
        auto c = heat(g, [](const Point&) { return 3.0; }, 1.0, 1e-2);
        auto L = derivative_ladder(c, c.u_init, 0.0, 4);
        for (int k = 1; k <= 4; ++k) REQUIRE(L.d[k].max_abs() < 1e-10);
        auto L0 = derivative_ladder(p, p.u_init, 0.0, 0);
        REQUIRE(L0.d.size() == 1);
        REQUIRE(L0.d[0].values() == p.u_init.values());
    }

    SECTION("first entry matches the time difference of the solve") {
        Grid gf = strip(128);
        auto q = heat(gf, [](const Point& x) { return std::sin(x[0]); }, 1.0, 1e-2);
        const double dt = 1e-3;
        q.dt = dt;
        q.t_end = 0.5 + dt;
        q.output_times = {0.5 - dt, 0.5, 0.5 + dt};
        auto s = solve(q);
        auto L = derivative_ladder(q, s.frames[2], 0.5, 1);
        auto fd = (1.0 / (2 * dt)) * (s.frames[3] - s.frames[1]);
        REQUIRE((L.d[1] - fd).max_abs() < 1e-5);
    }

    SECTION("bounded box too small for the depth") {
        Grid b = Grid::make(2, {0, 0, 0}, {0.5, 0.5, 0}, 0.125);
        auto q = heat(b, [](const Point&) { return 1.0; }, 1.0, 0.1);
        REQUIRE_THROWS_WITH(derivative_ladder(q, q.u_init, 0.0, 3), ContainsSubstring("grid margin"));
    }
}

TEST_CASE("growth fit", "[parabolic]") {
    for (int m : {1, 2}) {
        Grid g = strip(16);
        auto p = heat(g, [m](const Point& x) { return std::sin(m * x[0]); }, 1.0, 1e-2);
        auto L = derivative_ladder(p, p.u_init, 0.0, 10);
        auto fit = growth_fit(L, {pi / (2 * m), 0, 0}, 1.0, 0.0);
        CHECK(fit.a3_rate == Approx(m * m).epsilon(0.1));
        CHECK(fit.a3 <= m * m * (1 + 1e-9));
        for (double r : fit.residuals) CHECK(r <= 1e-12);
    }
    // Closed-form ladders: |d_k| = m^{2k}.
    std::vector<double> four;
    for (int k = 0; k <= 10; ++k) four.push_back(std::pow(4.0, k));
    auto fit = growth_fit(four, {0, 0, 0}, 1.0, 0.0);
    REQUIRE(fit.a3 == Approx(2.0));  // attained at k = 1
    REQUIRE(fit.a3_rate == Approx(4.0));
    auto zero = growth_fit(std::vector<double>(5, 0.0), {0, 0, 0}, 1.0, 0.0);
    REQUIRE(zero.a3 == 0.0);
    REQUIRE_THROWS_WITH(growth_fit(std::vector<double>{1.0, NAN}, {0, 0, 0}, 1.0, 0.0), ContainsSubstring("non-finite"));
}

TEST_CASE("Taylor reconstruction", "[parabolic]") {
    Grid g = strip(16);
    auto p = heat(g, [](const Point& x) { return std::sin(x[0]); }, 1.3, 1e-3);
    p.output_times = {0.7, 1.0, 1.3};
    auto s = solve(p);
    auto L = derivative_ladder(p, s.frames[2], 1.0, 10);
    for (int side : {1, 3}) {
        auto rec = taylor_reconstruct(L, 0.3, s.times[side], 10);
        REQUIRE((rec - s.frames[side]).max_abs() <= 1e-6);
    }
    REQUIRE(taylor_reconstruct(L, 0.3, 1.0, 10).values() == L.d[0].values());
    auto errs = taylor_errors(L, 1.3, s.frames[3]);
    for (std::size_t j = 1; j < 8; ++j) REQUIRE(errs[j] < errs[j - 1]);

    auto c = heat(g, [](const Point&) { return 2.0; }, 1.0, 1e-2);
    auto Lc = derivative_ladder(c, c.u_init, 0.0, 8);
    for (int J = 6; J <= 9; ++J) {
        auto rec = taylor_reconstruct(Lc, 0.5, 0.4, J);
        for (double v : rec.values()) REQUIRE(v == Approx(2.0).margin(1e-10));
    }

    REQUIRE_THROWS_WITH(taylor_reconstruct(L, 0.3, 1.5, 10), ContainsSubstring("exceeds delta"));
    // High mode with a large step: terms grow.
    auto h = heat(g, [](const Point& x) { return std::sin(4 * x[0]); }, 1.0, 1e-2);
    auto Lh = derivative_ladder(h, h.u_init, 0.0, 8);
    REQUIRE_THROWS_WITH(taylor_reconstruct(Lh, 1.0, 1.0, 8), ContainsSubstring("diverge"));
}

TEST_CASE("local estimate audits", "[parabolic]") {
    Grid g = Grid::make(2, {-2, -2, 0}, {4, 4, 0}, 1.0 / 16);
    auto p = heat(g, [](const Point& x) { return std::sin(x[0]); }, 1.0, 0.02);
    auto exact = [&](double scale) {
        ScalarSeries s;
        for (int i = 0; i <= 50; ++i) {
            double t = i * 0.02;
            s.push(t, ScalarField::sample(g, [t, scale](const Point& x) { return scale * std::exp(-t) * std::sin(x[0]); }));
        }
        return s;
    };
    auto u = exact(1.0);

    SECTION("constants") {
        ScalarSeries c;
        for (double t : u.times) c.push(t, ScalarField::sample(g, [](const Point&) { return -4.0; }));
        REQUIRE(audit_caccioppoli(c, nullptr, 0.5, 1.0, 1.0, {0, 0, 0}) < 1e-10);
        double R = 1.0;
        double lb = audit_local_boundedness(c, nullptr, R, 1.0, {0, 0, 0});
        double q_measure = cylinder_norm(c, Cylinder{1.0, {0, 0, 0}, R}, NormKind::L2) / 4.0;
        REQUIRE(lb == Approx(std::pow(R, 2.0) / q_measure).epsilon(1e-12));
        REQUIRE(lb == Approx(std::pow(R, 2.0) / std::sqrt(pi * R * R * R * R)).epsilon(0.02));
    }

    SECTION("scaling invariance") {
        auto u7 = exact(7.0);
        double a = audit_caccioppoli(u, nullptr, 0.5, 1.0, 1.0, {0, 0, 0});
        double b = audit_caccioppoli(u7, nullptr, 0.5, 1.0, 1.0, {0, 0, 0});
        REQUIRE(std::isfinite(a));
        REQUIRE(a > 0);
        REQUIRE(b == Approx(a).epsilon(1e-12));
        double la = audit_local_boundedness(u, nullptr, 1.0, 1.0, {0, 0, 0});
        REQUIRE(audit_local_boundedness(u7, nullptr, 1.0, 1.0, {0, 0, 0}) == Approx(la).epsilon(1e-12));
    }

    SECTION("ratio stays comparable across radii") {
        std::vector<double> r;
        for (double R : {1.0, 0.5, 0.25}) r.push_back(audit_local_boundedness(u, nullptr, R, 1.0, {0.3, 0, 0}));
        double hi = *std::max_element(r.begin(), r.end()), lo = *std::min_element(r.begin(), r.end());
        REQUIRE(hi / lo <= 4.0);
    }

    SECTION("time-derivative audit is finite") {
        double v = audit_time_derivative(u, nullptr, 0.5, 0.9, {0, 0, 0}, 0.5, 0.25);
        REQUIRE(std::isfinite(v));
        REQUIRE(v > 0);
    }
}
