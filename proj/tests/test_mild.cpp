#include "lab/kernels.hpp"
#include "lab/mild.hpp"
#include "lab/projection.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace lab;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

constexpr double pi = std::numbers::pi;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

Grid strip(double h, double top) { return Grid::make(2, {0, 0, 0}, {4 * h, top, 0}, h, true, {true, false, false}); }
Grid box(double h) { return Grid::make(2, {0, 0, 0}, {4, 4, 0}, h, true, {true, false, false}); }

// Odd-extension heat evolution of x e^{-x²/4σ}, scaled by A.
double shear(double x, double t, double A = 0.15, double sigma = 0.1) {
    return A * x * std::pow(sigma / (sigma + t), 1.5) * std::exp(-x * x / (4 * (sigma + t)));
}

TensorField gaussian_source(const Grid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    double amp[4], cx[4], cy[4];
    for (int c = 0; c < 4; ++c) {
        amp[c] = u(rng);
        cx[c] = 2 + 0.3 * u(rng);
        cy[c] = 1 + 0.3 * u(rng);
    }
    return TensorField::sample(g, [=](const Point& x, int c) {
        double v = amp[c] * std::exp(-((x[0] - cx[c]) * (x[0] - cx[c]) + (x[1] - cy[c]) * (x[1] - cy[c])) / 0.18);
        if (c / 2 == 1) v *= x[1] / (x[1] + 0.1);
        return v;
    });
}

// (∂_2 ψ, -∂_1 ψ) for ψ = x_2² exp(-|x - c|²/2s²), scaled to sup norm `amp`.
VectorField stream_field(const Grid& g, double amp, double cx, double cy, double s) {
    auto f = VectorField::sample(g, [=](const Point& x, int c) {
        double dx = x[0] - cx, dy = x[1] - cy, e = std::exp(-(dx * dx + dy * dy) / (2 * s * s)), y2 = x[1] * x[1];
        return c == 0 ? (2 * x[1] - y2 * dy / (s * s)) * e : y2 * dx / (s * s) * e;
    });
    return (amp / f.max_abs()) * f;
}

KernelConstants fixed_constants() {
    KernelConstants k;
    k.C = 2.2;
    k.C0 = 1.2;
    return k;
}

double rel_max(const VectorField& a, const VectorField& b) { return (a - b).max_abs() / b.max_abs(); }

}  // namespace

TEST_CASE("singular time rule", "[mild]") {
    for (double t : {0.1, 1.0}) {
        auto r = singular_rule(t);
        double sum = 0.0, quad = 0.0;
        for (std::size_t k = 0; k < r.w.size(); ++k) {
            sum += r.w[k];
            quad += r.w[k] * std::pow(t - r.tau[k], 2);
        }
        REQUIRE(sum == Approx(2 * std::sqrt(t)).epsilon(1e-10));
        REQUIRE(quad == Approx(std::pow(t, 2.5) / 2.5).epsilon(1e-10));
    }
    auto nodes = graded_nodes(0.2, 4);
    REQUIRE(nodes.size() == 5);
    REQUIRE(nodes[1] == Approx(0.2 / 16));
    REQUIRE(nodes.back() == 0.2);
}

TEST_CASE("semigroup term", "[mild]") {
    SECTION("single tangential mode against the Green symbol") {
        const double h = 1.0 / 64, t = 0.05, xi = 2 * pi;
        Grid g = Grid::make(2, {0, 0, 0}, {1, 3, 0}, h, true, {true, false, false});
        auto phi = [](double y) { return y * std::exp(-4 * y * y); };
        for (int cin : {0, 1}) {
            auto u0 = VectorField::sample(g, [&](const Point& x, int c) { return c == cin ? std::cos(2 * pi * x[0]) * phi(x[1]) : 0.0; });
            auto u = semigroup_term(u0, t);
            double err = 0, big = 0;
            for (int i : {3, 10, 30, 60})
                for (int out = 0; out < 2; ++out) {
                    auto part = [&](bool im) {
                        return GK::integrate([&](double y) {
                            auto v = green_symbol(t, &xi, 2, i * h, y, out, cin) * phi(y);
                            return im ? v.imag() : v.real();
                        }, 0.0, 3.0, 12, 1e-12);
                    };
                    std::complex<double> I(part(false), part(true));
                    for (int k : {0, 5, 17}) {
                        double ex = (std::exp(std::complex<double>(0, xi * k * h)) * I).real();
                        err = std::max(err, std::abs(u(g.ravel({k, i, 0}), out) - ex));
                        big = std::max(big, std::abs(ex));
                    }
                }
            REQUIRE(err <= 1e-3 * big);
        }
    }
    SECTION("shear data follows the images heat evolution") {
        Grid g = strip(1.0 / 64, 4);
        auto u0 = VectorField::sample(g, [](const Point& x, int c) { return c == 0 ? shear(x[1], 0) : 0.0; });
        auto u = semigroup_term(u0, 0.1);
        auto ex = VectorField::sample(g, [](const Point& x, int c) { return c == 0 ? shear(x[1], 0.1) : 0.0; });
        REQUIRE(rel_max(u, ex) <= 1e-2);
    }
    SECTION("short times recover the data; boundary stays zero") {
        Grid g = box(1.0 / 32);
        auto u0 = stream_field(g, 1.0, 2.0, 1.2, 0.6);
        REQUIRE(rel_max(semigroup_term(u0, 1e-3), u0) <= 2e-2);
        auto u = semigroup_term(u0, 0.05);
        for (std::size_t node = 0; node < g.size(); node += g.stride(0))
            for (int c = 0; c < 2; ++c) REQUIRE(std::abs(u(node, c)) < 1e-12);
        REQUIRE(semigroup_term(VectorField(g), 0.1).max_abs() == 0.0);
    }
}

TEST_CASE("quadratic source", "[mild]") {
    Grid g = box(1.0 / 8);
    auto F = gaussian_source(g, 1);
    auto S = assemble_quadratic_source(VectorField(g), &F);
    REQUIRE((S + F).max_abs() == 0.0);
    auto one = VectorField::sample(g, [](const Point&, int c) { return c == 0 ? 1.0 : 0.0; });
    auto S1 = assemble_quadratic_source(one);
    REQUIRE(S1.at(5, 0, 0) == 1.0);
    REQUIRE(S1.at(5, 0, 1) == 0.0);
    REQUIRE(S1.at(5, 1, 1) == 0.0);
    auto u = stream_field(g, 1.0, 2.0, 1.0, 0.4);
    auto Su = assemble_quadratic_source(u);
    for (std::size_t node = 0; node < g.size(); node += g.stride(0))
        for (int m = 0; m < 2; ++m) REQUIRE(Su.at(node, 1, m) == 0.0);
}

TEST_CASE("Duhamel term", "[mild]") {
    Grid g = box(1.0 / 32);
    auto S = gaussian_source(g, 3);
    auto f = (-1.0) * helmholtz_decompose(tensor_divergence(S)).qf;
    SECTION("kernel action equals the semigroup on the projected divergence") {
        for (double s : {1e-3, 1e-2, 0.1}) REQUIRE(rel_max(kernel_action(S, s), semigroup_term(f, s)) <= 1e-2);
    }
    SECTION("constant source against the time integral of the semigroup") {
        const double t = 0.1;
        TensorSeries ser;
        for (double tt : graded_nodes(t, 8)) ser.push(tt, S);
        auto D = duhamel_term(ser, t);
        auto rule = singular_rule(t, 6, 12);
        VectorField oracle(g);
        for (std::size_t k = 0; k < rule.tau.size(); ++k) {
            double s = t - rule.tau[k];
            oracle = oracle + (rule.w[k] * std::sqrt(s)) * semigroup_term(f, s);
        }
        REQUIRE(rel_max(D, oracle) <= 1e-2);
    }
    SECTION("zero source and coverage") {
        TensorSeries zero;
        zero.push(0.0, TensorField(g));
        zero.push(0.1, TensorField(g));
        REQUIRE(duhamel_term(zero, 0.1).max_abs() == 0.0);
        TensorSeries short_;
        short_.push(0.0, S);
        short_.push(0.05, S);
        REQUIRE_THROWS_WITH(duhamel_term(short_, 0.1), ContainsSubstring("time-node resolution insufficient"));
    }
    SECTION("square-root growth for a source with a tangential jump") {
        Grid gj = Grid::make(2, {0, 0, 0}, {4, 3, 0}, 1.0 / 64, true, {true, false, false});
        auto J = TensorField::sample(gj, [](const Point& x, int c) {
            return c == 1 && x[0] >= 2 ? std::exp(-(x[1] - 1) * (x[1] - 1) / 0.5) : 0.0;
        });
        std::vector<double> ts = {0.02, 0.01, 0.005, 0.0025}, v;
        for (double t : ts) {
            TensorSeries ser;
            ser.push(0.0, J);
            ser.push(t, J);
            v.push_back(duhamel_term(ser, t).max_abs());
        }
        REQUIRE(loglog_slope(ts, v) == Approx(0.5).margin(0.1));
    }
}

TEST_CASE("Picard iteration", "[mild]") {
    SECTION("zero data is a fixed point after one step") {
        MildProblem p;
        p.u0 = VectorField(box(1.0 / 8));
        p.constants = fixed_constants();
        auto r = picard_solve(p);
        REQUIRE(r.converged);
        REQUIRE(r.states.size() == 1);
        for (const auto& f : r.u.frames) REQUIRE(f.max_abs() == 0.0);
    }
    SECTION("smallness refusal reports the admissible horizon") {
        MildProblem p;
        p.u0 = stream_field(box(1.0 / 8), 1.0, 2.0, 1.0, 0.4);
        p.constants = fixed_constants();
        auto s = check_smallness(2.2, 1.2, 1.0, 0.2);
        REQUIRE_FALSE(s.ok);
        REQUIRE(check_smallness(2.2, 1.2, 1.0, s.admissible_T).lhs == Approx(0.5));
        REQUIRE_THROWS_WITH(picard_solve(p), ContainsSubstring("admissible T"));
    }
    SECTION("inadmissible data") {
        Grid g = box(1.0 / 8);
        MildProblem p;
        p.constants = fixed_constants();
        p.u0 = VectorField::sample(g, [](const Point& x, int c) { return c == 0 ? std::exp(-(x[0] - 2) * (x[0] - 2)) : 0.0; });
        REQUIRE_THROWS_WITH(picard_solve(p), ContainsSubstring("vanish at x_n = 0"));
        p.u0 = VectorField::sample(g, [](const Point& x, int c) {
            return c == 0 ? x[1] * std::exp(-(x[0] - 2) * (x[0] - 2) - (x[1] - 1) * (x[1] - 1)) : 0.0;
        });
        REQUIRE_THROWS_WITH(picard_solve(p), ContainsSubstring("divergence free"));
    }
    SECTION("shear flow matches the images heat solution") {
        Grid g = strip(1.0 / 32, 4);
        MildProblem p;
        p.u0 = VectorField::sample(g, [](const Point& x, int c) { return c == 0 ? shear(x[1], 0) : 0.0; });
        p.constants = fixed_constants();
        auto r = picard_solve(p);
        REQUIRE(r.converged);
        std::vector<double> ts;
        for (int k = 0; k <= 6; ++k) ts.push_back(0.05 + 0.025 * k);
        auto u = evaluate_mild(p, r, ts);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            auto ex = VectorField::sample(g, [&](const Point& x, int c) { return c == 0 ? shear(x[1], ts[k]) : 0.0; });
            REQUIRE(rel_max(u.frames[k], ex) <= 2e-2);
        }
    }
    SECTION("forced small data contracts and vanishes on the boundary") {
        Grid g = box(1.0 / 16);
        MildProblem p;
        p.u0 = stream_field(g, 0.03, 2.1, 1.0, 0.35);
        auto F0 = gaussian_source(g, 11);
        p.F = [F0](double t) { return (0.02 * std::cos(3 * t)) * F0; };
        p.T = 0.2;
        p.time_nodes = 12;
        p.constants = fixed_constants();
        auto r = picard_solve(p);
        REQUIRE(r.smallness.ok);
        REQUIRE(r.converged);
        for (std::size_t m = 1; m < r.states.size(); ++m) REQUIRE(r.states[m].ratio <= 0.6);
        REQUIRE(r.residual <= 2 * p.tol);
        for (const auto& f : r.u.frames)
            for (std::size_t node = 0; node < g.size(); node += g.stride(0))
                for (int c = 0; c < 2; ++c) REQUIRE(std::abs(f(node, c)) < 1e-12);
        auto path = std::filesystem::temp_directory_path() / "lab_picard_test.csv";
        write_picard_csv(path, r.states);
        std::ifstream is(path);
        std::string header;
        std::getline(is, header);
        REQUIRE(header == "m,sup_norm,diff_norm,ratio");
        std::filesystem::remove(path);
    }
    SECTION("nonlinear correction is quadratic in the data") {
        Grid g = box(1.0 / 16);
        std::vector<double> ratios;
        for (double amp : {0.04, 0.02, 0.01, 0.005}) {
            MildProblem p;
            p.u0 = stream_field(g, amp, 2.0, 1.0, 0.35);
            p.time_nodes = 8;
            p.constants = fixed_constants();
            auto r = picard_solve(p);
            double d = 0.0;
            for (std::size_t i = 1; i < r.u.size(); ++i) d = std::max(d, (r.u.frames[i] - semigroup_term(p.u0, r.u.times[i])).max_abs());
            ratios.push_back(d / (amp * amp));
        }
        auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        REQUIRE(*lo > 0.0);
        REQUIRE(*hi / *lo <= 1.2);
    }
}

TEST_CASE("kernel probe far from the boundary", "[mild]") {
    ProbeGrid pg;
    pg.h = 1.0 / 16;
    pg.tangential = 4;
    pg.normal = 3;
    auto v = probe_kernel_l1(2, 1.0 / 16, 1.5, pg);
    // Far from the wall G is close to the heat kernel, whose L¹ norm is 1.
    REQUIRE(v.g == Approx(1.0).margin(0.15));
    REQUIRE(v.ktilde > 0.0);
    REQUIRE_THROWS_WITH(probe_kernel_l1(2, 0.1, 10.0, pg), ContainsSubstring("outside the grid"));
}
