#include "lab/projection.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <tuple>

using namespace lab;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

Grid box(int n, double h, double side = 4.0) {
    if (n == 2) return Grid::make(2, {0, 0, 0}, {side, side, 0}, h, true, {true, false, false});
    return Grid::make(3, {0, 0, 0}, {side, side, side}, h, true, {true, true, false});
}

double bump(const Point& x, int n, const Point& c, double s) {
    double r2 = 0;
    for (int k = 0; k < n; ++k) r2 += (x[k] - c[k]) * (x[k] - c[k]);
    return std::exp(-r2 / (2 * s * s));
}

// Gaussian-windowed tensor with the normal rows vanishing on the boundary.
TensorField random_admissible(const Grid& g, unsigned seed) {
    const int n = g.dim();
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1), pos(1.6, 2.4);
    std::vector<double> amp(n * n);
    std::vector<Point> ctr(n * n);
    for (int c = 0; c < n * n; ++c) {
        amp[c] = u(rng);
        for (int k = 0; k < n; ++k) ctr[c][k] = pos(rng);
        ctr[c][n - 1] = 0.6 + 0.4 * u(rng);
    }
    return TensorField::sample(g, [&](const Point& x, int c) {
        double v = amp[c] * bump(x, n, ctr[c], 0.3);
        if (c / n == n - 1) v *= x[n - 1] / (x[n - 1] + 0.1);
        return v;
    });
}

double l2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double rel_l2(const VectorField& a, const VectorField& b) {
    return l2((a - b).values()) / l2(b.values());
}

TensorField local_part(const TensorField& F) {
    const int n = F.grid().dim();
    TensorField out(F.grid());
    for (int k = 0; k < n; ++k)
        for (int m = 0; m < n; ++m)
            for (const auto& t : projection_local_terms(n, k, m))
                for (std::size_t node = 0; node < F.size(); ++node) out.at(node, k, m) += t.c * F.at(node, t.k, t.l);
    return out;
}

}  // namespace

TEST_CASE("coefficient table matches the divergence of the layer terms", "[projection]") {
    for (int n : {2, 3}) {
        using Key = std::tuple<int, std::array<int, 3>, int, int, int>;
        std::map<Key, double> derived, table;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (auto t : projection_layer_terms(n, k, j)) {
                    REQUIRE(t.row == j);
                    t.d[2] = k;
                    std::sort(t.d.begin(), t.d.end());
                    derived[{j, t.d, t.sign, t.k, t.l}] += t.c;
                }
        for (const auto& t : h_coefficients(n)) table[{t.row, t.d, t.sign, t.k, t.l}] += t.c;
        std::erase_if(derived, [](const auto& e) { return e.second == 0.0; });
        REQUIRE(derived.size() == table.size());
        for (const auto& [key, c] : table) {
            INFO("n = " << n << " row " << std::get<0>(key));
            REQUIRE(derived.count(key) == 1);
            REQUIRE(derived[key] == c);
        }
    }
    REQUIRE(h_coefficients(2).size() == 8);
    REQUIRE(h_coefficients(3).size() == 34);
    REQUIRE_THROWS_WITH(h_coefficients(4), ContainsSubstring("n = 2 or 3"));
}

TEST_CASE("normal row of F' is algebraic", "[projection]") {
    for (int n : {2, 3}) {
        for (int m = 0; m < n; ++m) REQUIRE(projection_layer_terms(n, n - 1, m).empty());
    }
}

TEST_CASE("helmholtz decomposition", "[projection]") {
    Grid g = box(2, 1.0 / 64);
    SECTION("gradient fields have no solenoidal part") {
        const Point c{2.0, 1.2, 0};
        auto f = VectorField::sample(g, [&](const Point& x, int k) {
            return -(x[k] - c[k]) / 0.09 * bump(x, 2, c, 0.3);
        });
        auto parts = helmholtz_decompose(f);
        REQUIRE(parts.qf.max_abs() <= 1e-3 * f.max_abs());
    }
    SECTION("shear flow is solenoidal") {
        auto f = VectorField::sample(g, [](const Point& x, int k) { return k == 0 ? x[1] * std::exp(-x[1] * x[1]) : 0.0; });
        auto parts = helmholtz_decompose(f);
        REQUIRE(parts.grad_phi.max_abs() < 1e-12);
    }
    SECTION("solenoidal part is divergence free with zero normal trace") {
        auto f = VectorField::sample(g, [](const Point& x, int k) {
            return (k + 1.0) * bump(x, 2, {1.8 + 0.3 * k, 1.0, 0}, 0.3);
        });
        auto parts = helmholtz_decompose(f);
        auto div = vector_divergence(parts.qf);
        REQUIRE(div.max_abs() <= 5e-3 * f.max_abs() / 0.3);
        for (std::size_t node = 0; node < g.size(); node += g.stride(0))
            REQUIRE(std::abs(parts.qf(node, 1)) <= 1e-3 * f.max_abs());
        auto sum = parts.grad_phi + parts.qf;
        for (std::size_t k = 0; k < sum.values().size(); ++k) REQUIRE(sum.values()[k] == Approx(f.values()[k]).margin(1e-15));
    }
    SECTION("zero field") {
        auto parts = helmholtz_decompose(VectorField(g));
        REQUIRE(parts.grad_phi.max_abs() == 0.0);
        REQUIRE(parts.qf.max_abs() == 0.0);
    }
}

TEST_CASE("divergence-form projection", "[projection]") {
    Grid g = box(2, 1.0 / 64);
    SECTION("only F_nn nonzero leaves the normal row empty") {
        auto F = TensorField::sample(g, [](const Point& x, int c) {
            return c == 3 ? x[1] * x[1] * bump(x, 2, {2, 1, 0}, 0.3) : 0.0;
        });
        auto Fp = project_F(F);
        for (std::size_t node = 0; node < g.size(); ++node) {
            REQUIRE(Fp.at(node, 1, 1) == 0.0);
            REQUIRE(Fp.at(node, 1, 0) == 0.0);
        }
    }
    SECTION("zero and linearity") {
        REQUIRE(project_F(TensorField(g)).max_abs() == 0.0);
        auto F1 = random_admissible(g, 1), F2 = random_admissible(g, 2);
        auto lhs = project_F(2.5 * F1 + (-0.75) * F2);
        auto rhs = 2.5 * project_F(F1) + (-0.75) * project_F(F2);
        REQUIRE((lhs - rhs).max_abs() <= 1e-12 * rhs.max_abs());
    }
    SECTION("divergence of F' is the solenoidal part of the divergence") {
        for (unsigned seed : {3u, 4u, 5u}) {
            auto F = random_admissible(g, seed);
            auto divF = tensor_divergence(F);
            auto q = helmholtz_decompose(divF).qf;
            auto divFp = tensor_divergence(project_F(F));
            double r = l2((divFp - q).values()) / l2(divF.values());
            INFO("seed " << seed << " residual " << r);
            REQUIRE(r <= 2e-2);
        }
    }
    SECTION("boundary flag") {
        auto F = TensorField::sample(g, [](const Point& x, int c) { return c == 2 ? bump(x, 2, {2, 0.5, 0}, 0.3) : 0.0; });
        REQUIRE_THROWS_WITH(project_F(F), ContainsSubstring("boundary flag violated"));
        REQUIRE_THROWS_WITH(compute_h(F), ContainsSubstring("boundary flag violated"));
    }
}

TEST_CASE("nonlocal divergence part", "[projection]") {
    SECTION("n = 2 matches div F' minus local terms") {
        Grid g = box(2, 1.0 / 64);
        auto F = random_admissible(g, 7);
        auto h = compute_h(F);
        auto rest = tensor_divergence(project_F(F)) - tensor_divergence(local_part(F));
        REQUIRE(rel_l2(h, rest) <= 2e-2);
        REQUIRE(compute_h(TensorField(g)).max_abs() == 0.0);
    }
    SECTION("only F_nn nonzero") {
        Grid g = box(2, 1.0 / 64);
        auto F = TensorField::sample(g, [](const Point& x, int c) {
            return c == 3 ? x[1] * x[1] * bump(x, 2, {2, 1, 0}, 0.3) : 0.0;
        });
        auto rest = tensor_divergence(project_F(F)) - tensor_divergence(local_part(F));
        REQUIRE(rel_l2(compute_h(F), rest) <= 2e-2);
    }
    SECTION("n = 3 matches div F' minus local terms") {
        Grid g = box(3, 1.0 / 16);
        auto F = random_admissible(g, 8);
        auto rest = tensor_divergence(project_F(F)) - tensor_divergence(local_part(F));
        REQUIRE(rel_l2(compute_h(F), rest) <= 2e-2);
    }
    SECTION("tangential translation equivariance") {
        Grid g = box(2, 1.0 / 64);
        const int shift = 24;
        const double dx = shift * g.h();
        auto F = random_admissible(g, 9);
        auto Fs = TensorField::sample(g, [&](const Point& x, int c) {
            Point y = x;
            y[0] = x[0] - dx;
            if (y[0] < 0) y[0] += g.extent(0);
            std::size_t node = g.ravel({int(std::lround(y[0] / g.h())), int(std::lround(y[1] / g.h())), 0});
            return F(node, c);
        });
        auto h = compute_h(F), hs = compute_h(Fs);
        double err = 0;
        for (std::size_t node = 0; node < g.size(); ++node) {
            Index i = g.unravel(node);
            i[0] = (i[0] + shift) % g.nodes(0);
            std::size_t moved = g.ravel(i);
            for (int c = 0; c < 2; ++c) err = std::max(err, std::abs(hs(moved, c) - h(node, c)));
        }
        REQUIRE(err <= 1e-3 * h.max_abs());
    }
}
