#include "lab/experiments.hpp"

#include "lab/numerics.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

namespace lab {

int worker_count() {
    if (const char* env = std::getenv("LAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

VectorField shear_field(const Grid& g, double amplitude, double sigma, double t) {
    const int n = g.dim();
    const double s = sigma + t, scale = amplitude * std::pow(sigma / s, 1.5);
    return VectorField::sample(g, [&](const Point& x, int c) {
        return c == 0 ? scale * x[n - 1] * std::exp(-x[n - 1] * x[n - 1] / (4 * s)) : 0.0;
    });
}

VectorField stream_field(const Grid& g, double amplitude, const Point& centre, double width) {
    if (g.dim() != 2) throw Error("stream generator requires n = 2");
    const double s2 = width * width;
    auto f = VectorField::sample(g, [&](const Point& x, int c) {
        double dx = x[0] - centre[0], dy = x[1] - centre[1], e = std::exp(-(dx * dx + dy * dy) / (2 * s2)), y2 = x[1] * x[1];
        return c == 0 ? (2 * x[1] - y2 * dy / s2) * e : y2 * dx / s2 * e;
    });
    const double m = f.max_abs();
    return m > 0 ? (amplitude / m) * f : f;
}

TensorField gaussian_tensor(const Grid& g, std::uint64_t seed, double amplitude, double width) {
    const int n = g.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> amp(n * n);
    std::vector<Point> ctr(n * n);
    for (int c = 0; c < n * n; ++c) {
        amp[c] = u(rng);
        for (int k = 0; k < n - 1; ++k) ctr[c][k] = g.origin(k) + g.extent(k) * (0.5 + 0.1 * u(rng));
        ctr[c][n - 1] = 0.6 + 0.4 * u(rng);
    }
    auto F = TensorField::sample(g, [&](const Point& x, int c) {
        double r2 = 0.0;
        for (int k = 0; k < n; ++k) r2 += (x[k] - ctr[c][k]) * (x[k] - ctr[c][k]);
        double v = amp[c] * std::exp(-r2 / (2 * width * width));
        if (c / n == n - 1) v *= x[n - 1] / (x[n - 1] + 0.1);
        return v;
    });
    const double m = F.max_abs();
    return m > 0 ? (amplitude / m) * F : F;
}

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
    std::filesystem::path p(file);
    return p.is_absolute() ? p : base / p;
}

}  // namespace

Grid grid_from_json(const Json& j) {
    try {
        const int n = get_or(j, "n", 2);
        if (n != 2 && n != 3) throw ConfigError("grid dimension must be 2 or 3");
        Point origin{}, extent{};
        std::array<bool, 3> periodic{false, false, false};
        auto o = get_or(j, "origin", std::vector<double>(n, 0.0));
        auto e = j.at("extent").get<std::vector<double>>();
        auto p = get_or(j, "periodic", std::vector<bool>(n, false));
        if (static_cast<int>(o.size()) != n || static_cast<int>(e.size()) != n || static_cast<int>(p.size()) != n)
            throw ConfigError("grid origin, extent and periodic need n entries");
        for (int k = 0; k < n; ++k) {
            origin[k] = o[k];
            extent[k] = e[k];
            periodic[k] = p[k];
        }
        return Grid::make(n, origin, extent, j.at("h").get<double>(), get_or(j, "halfspace", true), periodic);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("invalid grid: ") + ex.what());
    }
}

VectorField vector_data_from_json(const Json& j, const Grid& g, const std::filesystem::path& base) {
    if (j.contains("file")) {
        auto path = resolve(base, j.at("file").get<std::string>());
        if (!std::filesystem::exists(path)) throw ConfigError("missing field file: " + path.string());
        auto f = read_field<Rank::Vector>(path);
        if (!f.grid().same_as(g)) throw ConfigError("field file grid does not match the configured grid: " + path.string());
        return f;
    }
    const std::string gen = get_or<std::string>(j, "generator", "zero");
    if (gen == "zero") return VectorField(g);
    if (gen == "shear") return shear_field(g, get_or(j, "amplitude", 0.15), get_or(j, "sigma", 0.1), get_or(j, "t", 0.0));
    if (gen == "stream") {
        auto c = get_or(j, "centre", std::vector<double>{2.0, 1.0});
        if (c.size() != 2) throw ConfigError("stream centre needs two entries");
        return stream_field(g, get_or(j, "amplitude", 0.03), {c[0], c[1], 0}, get_or(j, "width", 0.35));
    }
    throw ConfigError("unknown vector generator: " + gen);
}

MildProblem mild_problem_from_json(const Json& j, const std::filesystem::path& base) {
    MildProblem p;
    try {
        Grid g = grid_from_json(j.at("grid"));
        const Json data = get_or(j, "data", Json::object());
        p.u0 = vector_data_from_json(get_or(data, "u0", Json::object()), g, base);
        if (data.contains("F") && !data.at("F").is_null()) {
            const Json& fj = data.at("F");
            TensorField F0;
            double amp = 1.0, freq = 0.0;
            if (fj.contains("file")) {
                auto path = resolve(base, fj.at("file").get<std::string>());
                if (!std::filesystem::exists(path)) throw ConfigError("missing field file: " + path.string());
                F0 = read_field<Rank::Tensor>(path);
                if (!F0.grid().same_as(g)) throw ConfigError("field file grid does not match the configured grid: " + path.string());
            } else if (get_or<std::string>(fj, "generator", "") == "gaussian") {
                F0 = gaussian_tensor(g, get_or<std::uint64_t>(fj, "seed", 1), 1.0, get_or(fj, "width", 0.3));
                amp = get_or(fj, "amplitude", 0.02);
                freq = get_or(fj, "frequency", 0.0);
            } else {
                throw ConfigError("forcing needs a file or the gaussian generator");
            }
            p.F = [F0, amp, freq](double t) { return (amp * std::cos(freq * t)) * F0; };
        }
        const Json time = get_or(j, "time", Json::object());
        p.T = get_or(time, "T", p.T);
        p.time_nodes = get_or(time, "nodes", p.time_nodes);
        const Json tol = get_or(j, "tolerances", Json::object());
        p.tol = get_or(tol, "picard", p.tol);
        p.max_iter = get_or(j, "max_iter", p.max_iter);
        if (j.contains("constants")) {
            p.constants.C = get_or(j.at("constants"), "C", 0.0);
            p.constants.C0 = get_or(j.at("constants"), "C0", 0.0);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("invalid problem description: ") + ex.what());
    }
    if (!(p.T > 0) || p.time_nodes < 2 || !(p.tol > 0)) throw ConfigError("T, time nodes and tolerance must be positive");
    return p;
}

Json catalog_json() {
    Json doc;
    doc["seed"] = 1;
    doc["experiments"] = Json::array();
    for (const auto& e : experiment_catalog()) {
        Json x = e.config;
        x["description"] = e.description;
        x["criteria"] = e.criteria;
        doc["experiments"].push_back(x);
    }
    return doc;
}

Json RunConfig::resolved() const {
    Json doc;
    doc["seed"] = seed;
    doc["experiments"] = experiments;
    return doc;
}

namespace {

void check_files(const Json& j, const std::filesystem::path& base) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key() == "file" && it.value().is_string()) {
                auto path = resolve(base, it.value().get<std::string>());
                if (!std::filesystem::exists(path)) throw ConfigError("missing field file: " + path.string());
            } else {
                check_files(it.value(), base);
            }
        }
    } else if (j.is_array()) {
        for (const auto& x : j) check_files(x, base);
    }
}

Json merge_experiment(const Json& user) {
    if (!user.is_object()) throw ConfigError("experiment entries must be objects");
    std::string id;
    if (user.contains("id")) id = user.at("id").get<std::string>();
    else if (user.contains("experiment")) id = user.at("experiment").get<std::string>();
    else throw ConfigError("experiment entry without an id");
    for (const auto& e : experiment_catalog()) {
        if (e.id != id) continue;
        Json merged = e.config;
        Json patch = user;
        patch.erase("experiment");
        patch.erase("description");
        patch.erase("criteria");
        merged.merge_patch(patch);
        merged["id"] = id;
        if (merged.contains("tolerances")) {
            for (auto it = merged["tolerances"].begin(); it != merged["tolerances"].end(); ++it)
                if (!it.value().is_number() || !(it.value().get<double>() > 0))
                    throw ConfigError("tolerance " + it.key() + " must be a positive number");
        }
        if (merged.contains("n") && merged["n"] != 2 && merged["n"] != 3) throw ConfigError("n must be 2 or 3");
        return merged;
    }
    throw ConfigError("unknown experiment: " + id);
}

}  // namespace

RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base) {
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    RunConfig cfg;
    cfg.base = base;
    try {
        if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("experiments")) {
            if (!doc.at("experiments").is_array() || doc.at("experiments").empty())
                throw ConfigError("experiments must be a non-empty array");
            for (const auto& x : doc.at("experiments")) cfg.experiments.push_back(merge_experiment(x));
        } else {
            Json single = doc;
            single.erase("seed");
            cfg.experiments.push_back(merge_experiment(single));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("invalid configuration: ") + ex.what());
    }
    for (const auto& e : cfg.experiments) check_files(e, base);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read configuration: " + path.string());
    Json doc;
    try {
        is >> doc;
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("malformed configuration: ") + ex.what());
    }
    return parse_run_config(doc, path.parent_path());
}

bool ExperimentResult::ok() const {
    if (criteria.empty()) return false;
    for (const auto& c : criteria)
        if (!c.pass) return false;
    return true;
}

int run(const RunConfig& cfg, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    Json manifest;
    manifest["config"] = cfg.resolved();
    manifest["versions"] = {
        {"lab", "0.1.0"},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
    };
    manifest["experiments"] = Json::array();
    Json failed = Json::array();
    for (const auto& e : cfg.experiments) {
        const std::string id = e.at("id").get<std::string>();
        const std::uint64_t seed = e.contains("seed") ? e.at("seed").get<std::uint64_t>() : cfg.seed;
        ExperimentResult r;
        r.id = id;
        try {
            r = run_experiment(e, seed, cfg.base, out / id);
        } catch (const std::exception& ex) {
            r.criteria.push_back({0, "execution", false, ex.what()});
        }
        Json x;
        x["id"] = id;
        x["reports"] = r.reports;
        x["criteria"] = Json::array();
        for (const auto& c : r.criteria) {
            x["criteria"].push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
            std::cerr << id << ": criterion " << c.id << " (" << c.name << ") " << (c.pass ? "PASS" : "FAIL") << ": " << c.detail << '\n';
            if (!c.pass) failed.push_back(id + ": criterion " + std::to_string(c.id) + " " + c.name);
        }
        manifest["experiments"].push_back(x);
    }
    manifest["failed"] = failed;
    manifest["status"] = failed.empty() ? "pass" : "fail";
    std::ofstream os(out / "manifest.json");
    os << manifest.dump(2) << '\n';
    return failed.empty() ? 0 : 1;
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : os_(path) {
    if (!os_) throw Error("cannot write " + path.string());
    row(header);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
    return *this;
}

}  // namespace lab
