#include "lab/numerics.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <numbers>
#include <random>

using namespace lab;
using Catch::Approx;

namespace {

Grid unit_box(double h) { return Grid::make(2, {-1, -1, 0}, {2, 2, 0}, h); }

double max_interior_error(const ScalarField& r, const std::function<double(const Point&)>& exact) {
    double e = 0;
    for (std::size_t k = 0; k < r.size(); ++k)
        if (!r.grid().on_box_face(k)) e = std::max(e, std::abs(r(k) - exact(r.grid().position(k))));
    return e;
}

std::filesystem::path tmp(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / "lab_test_numerics";
    std::filesystem::create_directories(d);
    return d / name;
}

}  // namespace

TEST_CASE("divergence form stencil", "[numerics]") {
    Grid g = unit_box(0.125);
    TensorField a = identity_coefficients(g);

    SECTION("second difference of a quadratic") {
        auto u = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0]; });
        auto r = apply_divergence_form(a, u);
        for (std::size_t k = 0; k < r.size(); ++k) REQUIRE(r(k) == Approx(2.0).margin(1e-10));
    }

    SECTION("constant and affine fields") {
        auto c = ScalarField::sample(g, [](const Point&) { return 3.5; });
        REQUIRE(apply_divergence_form(a, c).max_abs() < 1e-12);
        TensorField b = TensorField::sample(g, [](const Point&, int c) {
            const double m[4] = {2.0, 0.3, 0.3, 1.5};
            return m[c];
        });
        auto u = ScalarField::sample(g, [](const Point& x) { return 1.0 + 2 * x[0] - 0.5 * x[1]; });
        REQUIRE(max_interior_error(apply_divergence_form(b, u), [](const Point&) { return 0.0; }) < 1e-12);
    }

    SECTION("variable coefficients with a source") {
        // ∂_1((1 + x1²) ∂_1 x1²) + ∂_1 x1 = 3 + 6 x1²
        TensorField b = TensorField::sample(g, [](const Point& x, int c) {
            return c == 0 ? 1 + x[0] * x[0] : c == 3 ? 1.0 : 0.0;
        });
        auto u = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0]; });
        auto f = VectorField::sample(g, [](const Point& x, int c) { return c == 0 ? x[0] : 0.0; });
        auto r = apply_divergence_form(b, u, &f);
        // Flux form is exact for polynomial data of this degree up to O(h²) in the averaged coefficient.
        double e = max_interior_error(r, [](const Point& x) { return 2 + 6 * x[0] * x[0] + 1; });
        REQUIRE(e < 2 * 0.125 * 0.125);
    }

    SECTION("half-space grid is rejected") {
        Grid hg = Grid::make(2, {-1, 0, 0}, {2, 1, 0}, 0.125, true);
        auto u = ScalarField(hg);
        REQUIRE_THROWS_WITH(apply_divergence_form(identity_coefficients(hg), u), Catch::Matchers::ContainsSubstring("half-space"));
    }

    SECTION("grid mismatch") {
        auto u = ScalarField(unit_box(0.25));
        REQUIRE_THROWS_WITH(apply_divergence_form(a, u), Catch::Matchers::ContainsSubstring("grid mismatch"));
    }
}

TEST_CASE("second-order convergence on a periodic box", "[numerics]") {
    const double L = 2 * std::numbers::pi;
    std::vector<double> err;
    for (int m : {16, 32, 64}) {
        Grid g = Grid::make(2, {0, 0, 0}, {L, L, 0}, L / m, false, {true, true, false});
        auto u = ScalarField::sample(g, [](const Point& x) { return std::sin(x[0]); });
        auto r = apply_divergence_form(identity_coefficients(g), u);
        err.push_back(max_interior_error(r, [](const Point& x) { return -std::sin(x[0]); }));
    }
    double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
    CHECK(p1 > 1.9);
    CHECK(p2 > 1.9);
}

TEST_CASE("manufactured variable-coefficient convergence", "[numerics]") {
    // u = sin(x1) cos(x2), a = [[2 + sin x1, 0.2],[0.2, 1 + 0.5 cos x2]]
    auto exact = [](const Point& x) {
        double s1 = std::sin(x[0]), c1 = std::cos(x[0]), s2 = std::sin(x[1]), c2 = std::cos(x[1]);
        double t11 = c1 * c1 * c2 - (2 + s1) * s1 * c2;
        double t22 = -0.5 * s2 * (-s1 * s2) - (1 + 0.5 * c2) * s1 * c2;
        double t12 = 0.2 * (-c1 * s2) * 2;
        return t11 + t22 + t12;
    };
    std::vector<double> err;
    for (double h : {0.05, 0.025, 0.0125}) {
        Grid g = Grid::make(2, {-1, -1, 0}, {2, 2, 0}, h);
        auto a = TensorField::sample(g, [](const Point& x, int c) {
            switch (c) {
            case 0: return 2 + std::sin(x[0]);
            case 3: return 1 + 0.5 * std::cos(x[1]);
            default: return 0.2;
            }
        });
        auto u = ScalarField::sample(g, [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]); });
        err.push_back(max_interior_error(apply_divergence_form(a, u), exact));
    }
    REQUIRE(std::log2(err[0] / err[1]) > 1.9);
    REQUIRE(std::log2(err[1] / err[2]) > 1.9);
}

TEST_CASE("face extrapolation keeps a smooth output", "[numerics]") {
    Grid g = unit_box(0.05);
    auto u = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0] * x[0]; });
    auto r = apply_divergence_form(identity_coefficients(g), u);
    // Exact second difference of a cubic is 6 x1; cubic extrapolation reproduces the linear field.
    for (std::size_t k = 0; k < r.size(); ++k) REQUIRE(r(k) == Approx(6 * g.position(k)[0]).margin(1e-9));
}

TEST_CASE("coefficient audit", "[numerics]") {
    Grid g = unit_box(0.25);
    auto au = audit_coefficients(identity_coefficients(g));
    REQUIRE(au.lambda_min == 1.0);
    REQUIRE(au.Lambda_max == 1.0);
}

TEST_CASE("cylinder norms", "[numerics]") {
    const double r = 0.5;
    Grid g = Grid::make(2, {-1, -1, 0}, {2, 2, 0}, r / 16);
    ScalarSeries ones, zeros, neg;
    for (int s = 0; s <= 20; ++s) {
        double t = 0.5 * s / 20;
        ones.push(t, ScalarField::sample(g, [](const Point&) { return 1.0; }));
        zeros.push(t, ScalarField(g));
        neg.push(t, ScalarField::sample(g, [](const Point&) { return -3.0; }));
    }
    Cylinder q{0.5, {0, 0, 0}, r};

    SECTION("unit field gives the root of the cylinder volume") {
        double vol = std::numbers::pi * r * r * r * r;
        REQUIRE(cylinder_norm(ones, q, NormKind::L2) == Approx(std::sqrt(vol)).epsilon(0.02));
    }

    SECTION("zero and constant fields") {
        REQUIRE(cylinder_norm(zeros, q, NormKind::L2) == 0.0);
        REQUIRE(cylinder_norm(zeros, q, NormKind::Linf) == 0.0);
        REQUIRE(cylinder_norm(neg, q, NormKind::Linf) == 3.0);
    }

    SECTION("monotone in the cylinder") {
        auto bump = ones;
        for (auto& f : bump.frames) f = ScalarField::sample(g, [](const Point& x) { return std::exp(-x[0] * x[0] - 2 * x[1]); });
        double prev = 0;
        for (double rr : {0.1, 0.2, 0.3, 0.4, 0.5}) {
            double v = cylinder_norm(bump, Cylinder{0.5, {0.1, 0, 0}, rr}, NormKind::L2);
            REQUIRE(v >= prev);
            prev = v;
        }
    }

    SECTION("cylinder outside the data") {
        REQUIRE_THROWS_WITH(cylinder_norm(ones, Cylinder{0.5, {0.8, 0, 0}, 0.5}, NormKind::L2),
                            Catch::Matchers::ContainsSubstring("exits sampled region"));
        REQUIRE_THROWS_WITH(cylinder_norm(ones, Cylinder{0.1, {0, 0, 0}, 0.5}, NormKind::L2),
                            Catch::Matchers::ContainsSubstring("exits sampled region"));
    }
}

TEST_CASE("field files round-trip", "[numerics][io]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;

    SECTION("scalar field bit-exact") {
        Grid g = Grid::make(2, {-1, 0, 0}, {2, 1, 0}, 0.125, true);
        ScalarField f(g);
        for (double& v : f.values()) v = nd(rng) * std::exp(nd(rng) * 20);
        write_field(tmp("s.field"), f);
        auto back = read_field<Rank::Scalar>(tmp("s.field"));
        REQUIRE(back.grid().same_as(g));
        REQUIRE(back.values() == f.values());
    }

    SECTION("tensor field in three dimensions") {
        Grid g = Grid::make(3, {0, 0, 0}, {1, 1, 1}, 0.25, false, {true, false, false});
        TensorField f(g);
        for (double& v : f.values()) v = nd(rng);
        write_field(tmp("t.field"), f);
        auto back = read_field<Rank::Tensor>(tmp("t.field"));
        REQUIRE(back.values() == f.values());
        REQUIRE(back.grid().periodic(0));
        REQUIRE(field_file_components(tmp("t.field")) == 9);
    }

    SECTION("series directory") {
        Grid g = unit_box(0.5);
        VectorSeries s;
        s.kind = NodeKind::Chebyshev;
        for (int k = 0; k < 3; ++k) {
            VectorField f(g);
            for (double& v : f.values()) v = nd(rng);
            s.push(0.1 * k, f);
        }
        write_series(tmp("series"), s);
        auto back = read_series<VectorField>(tmp("series"));
        REQUIRE(back.times == s.times);
        REQUIRE(back.kind == NodeKind::Chebyshev);
        for (int k = 0; k < 3; ++k) REQUIRE(back.frames[k].values() == s.frames[k].values());
    }

    SECTION("malformed inputs") {
        Grid g = unit_box(0.5);
        ScalarField f(g);
        write_field(tmp("ok.field"), f);
        std::ifstream in(tmp("ok.field"));
        std::string header;
        std::getline(in, header);
        {
            std::ofstream os(tmp("cut.field"));
            os << header.substr(0, header.size() / 2);
        }
        REQUIRE_THROWS_WITH(read_field<Rank::Scalar>(tmp("cut.field")), Catch::Matchers::ContainsSubstring("malformed header"));
        REQUIRE_THROWS_WITH(read_field<Rank::Vector>(tmp("ok.field")), Catch::Matchers::ContainsSubstring("component-count mismatch"));
        {
            std::ofstream os(tmp("short.field"));
            os << header << "\n0\n0\n";
        }
        REQUIRE_THROWS_WITH(read_field<Rank::Scalar>(tmp("short.field")), Catch::Matchers::ContainsSubstring("truncated"));
    }
}
