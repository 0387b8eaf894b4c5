#include "lab/experiments.hpp"
#include "lab/numerics.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <iterator>
#include <set>

using namespace lab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("lab_experiments_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_CASE("catalog lists the seven experiments with disjoint criteria") {
    const auto& c = experiment_catalog();
    REQUIRE(c.size() == 7);
    std::set<std::string> ids;
    std::multiset<int> crit;
    for (const auto& e : c) {
        ids.insert(e.id);
        crit.insert(e.criteria.begin(), e.criteria.end());
        CHECK(e.config.at("id") == e.id);
    }
    CHECK(ids == std::set<std::string>{"extension-equivalence", "heat-ladder", "kernel-scaling", "projection-residual", "ns-shear",
                                       "lemmas", "envelope"});
    for (int k = 1; k <= 10; ++k) CHECK(crit.count(k) == 1);
}

TEST_CASE("catalog json round-trips through the config parser") {
    const Json doc = catalog_json();
    auto cfg = parse_run_config(Json::parse(doc.dump()), ".");
    REQUIRE(cfg.experiments.size() == 7);
    CHECK(cfg.seed == 1);
    for (std::size_t k = 0; k < 7; ++k) {
        Json e = cfg.experiments[k];
        e.erase("description");
        e.erase("criteria");
        CHECK(e == experiment_catalog()[k].config);
    }
    auto again = parse_run_config(cfg.resolved(), ".");
    CHECK(again.resolved() == cfg.resolved());
}

TEST_CASE("user fields merge over the defaults") {
    auto cfg = parse_run_config(Json::parse(R"({"seed": 9, "experiments": [{"id": "lemmas", "params": {"kmax": 50}}]})"), ".");
    REQUIRE(cfg.experiments.size() == 1);
    CHECK(cfg.seed == 9);
    CHECK(cfg.experiments[0]["params"]["kmax"] == 50);
    CHECK(cfg.experiments[0]["params"]["trials"] == 200);
    auto single = parse_run_config(Json::parse(R"({"id": "heat-ladder"})"), ".");
    CHECK(single.experiments.size() == 1);
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"id": "nosuch"})"), "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"experiments": []})"), "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"id": "lemmas", "tolerances": {"sup_stability": -1}})"), "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"id": "lemmas", "tolerances": {"sup_stability": 0}})"), "."), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);

    const auto dir = scratch("missing");
    try {
        parse_run_config(Json::parse(R"({"id": "ns-shear", "data": {"u0": {"file": "absent.field"}}})"), dir);
        FAIL("missing file accepted");
    } catch (const ConfigError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("absent.field"));
    }
}

TEST_CASE("field file references load relative to the config") {
    const auto dir = scratch("fileref");
    Json cfg = experiment_catalog()[4].config;  // ns-shear
    Grid g = grid_from_json(cfg.at("grid"));
    write_field(dir / "u0.field", shear_field(g, 0.15, 0.1));
    Json data = {{"u0", {{"file", "u0.field"}}}};
    cfg["data"] = data;
    auto p = mild_problem_from_json(cfg, dir);
    CHECK((p.u0 - shear_field(g, 0.15, 0.1)).max_abs() == 0.0);

    Json other = cfg;
    other["grid"]["h"] = 1.0 / 16;
    CHECK_THROWS_AS(mild_problem_from_json(other, dir), ConfigError);
}

TEST_CASE("generators") {
    Grid g = Grid::make(2, {0, 0, 0}, {4, 4, 0}, 1.0 / 16, true, {true, false, false});
    auto F = gaussian_tensor(g, 3, 0.5);
    CHECK(F.max_abs() == Catch::Approx(0.5));
    for (std::size_t node = 0; node < g.size(); ++node)
        if (g.position(node)[1] == 0.0) {
            CHECK(F.at(node, 1, 0) == 0.0);
            CHECK(F.at(node, 1, 1) == 0.0);
        }
    auto same = gaussian_tensor(g, 3, 0.5);
    CHECK((F - same).max_abs() == 0.0);
    auto s = stream_field(g, 0.03, {2, 1, 0}, 0.35);
    CHECK(s.max_abs() == Catch::Approx(0.03));
}

TEST_CASE("runs are byte-identical for a fixed seed") {
    Json doc = Json::parse(R"({"seed": 4, "experiments": [{"id": "heat-ladder"}, {"id": "lemmas", "params": {"kmax": 40, "trials": 20}}]})");
    auto cfg = parse_run_config(doc, ".");
    const auto a = scratch("det_a"), b = scratch("det_b");
    const int ca = run(cfg, a), cb = run(cfg, b);
    CHECK(ca == cb);
    for (const char* f : {"manifest.json", "heat-ladder/ladder.csv", "heat-ladder/taylor.csv", "lemmas/sum_ratio.csv"}) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    auto manifest = Json::parse(slurp(a / "manifest.json"));
    CHECK(manifest.contains("versions"));
    CHECK(manifest.at("experiments").size() == 2);
}

TEST_CASE("failing criteria are named in the manifest") {
    // The sum-ratio supremum keeps growing past k = 20.
    auto cfg = parse_run_config(Json::parse(R"({"id": "lemmas", "params": {"kmax": 40, "trials": 5}})"), ".");
    const auto out = scratch("failing");
    CHECK(run(cfg, out) == 1);
    auto manifest = Json::parse(slurp(out / "manifest.json"));
    CHECK(manifest.at("status") == "fail");
    REQUIRE(manifest.at("failed").size() == 1);
    CHECK(manifest.at("failed")[0].get<std::string>().find("criterion 2") != std::string::npos);
}
