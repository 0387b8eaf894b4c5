#pragma once

#include "lab/core.hpp"
#include "lab/mild.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace lab {

using Json = nlohmann::json;

/// LAB_THREADS when set, otherwise the hardware concurrency.
int worker_count();

/// fn(i) for i in [0, count) on up to worker_count() threads; rethrows the first failure.
void parallel_for(int count, const std::function<void(int)>& fn);

// ---- named generators ------------------------------------------------------

/// (A x_n (σ/(σ+t))^{3/2} e^{-x_n²/4(σ+t)}, 0, ...): the images heat evolution of the
/// shear profile, a steady-convection solution of the Navier-Stokes system.
VectorField shear_field(const Grid& g, double amplitude, double sigma, double t = 0.0);

/// (∂_2ψ, -∂_1ψ) with ψ = x_2² e^{-|x - c|²/2w²}, scaled to sup norm `amplitude`; n = 2.
VectorField stream_field(const Grid& g, double amplitude, const Point& centre, double width);

/// Random Gaussian bumps per entry near the box centre; normal-row entries carry the
/// factor x_n/(x_n + 0.1) so that F_nm = 0 at x_n = 0. Scaled to sup norm `amplitude`.
TensorField gaussian_tensor(const Grid& g, std::uint64_t seed, double amplitude, double width = 0.3);

// ---- configuration ---------------------------------------------------------

/// Raised for invalid configurations and missing inputs (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// {"n", "h", "origin", "extent", "halfspace", "periodic"}; origin and extent list n entries.
Grid grid_from_json(const Json& j);

/// Vector data from {"generator": "shear" | "stream" | "zero", ...} or {"file": path}.
VectorField vector_data_from_json(const Json& j, const Grid& g, const std::filesystem::path& base);

/// Mild problem from {"grid", "time": {"T", "nodes"}, "data": {"u0", "F"}, "tolerances": {"picard"},
/// "max_iter", "constants": {"C", "C0"}}. F is {"generator": "gaussian", "seed", "amplitude",
/// "frequency"} (F(t) = amplitude cos(frequency t) F0) or {"file": path} (constant in time).
MildProblem mild_problem_from_json(const Json& j, const std::filesystem::path& base);

struct CatalogEntry {
    std::string id;
    std::string description;
    std::vector<int> criteria;
    Json config;  // complete experiment object with defaults
};

const std::vector<CatalogEntry>& experiment_catalog();

/// Catalog as a run configuration document ({"seed", "experiments": [...]}).
Json catalog_json();

struct RunConfig {
    std::uint64_t seed = 1;
    std::vector<Json> experiments;  // defaults merged with the user's fields
    std::filesystem::path base;     // relative file references resolve here
    Json resolved() const;
};

/// Accepts {"experiments": [...]} or a single experiment object with "id". Throws ConfigError.
RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base);
RunConfig load_run_config(const std::filesystem::path& path);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentResult {
    std::string id;
    std::vector<CriterionResult> criteria;
    std::vector<std::string> reports;  // file names inside the experiment directory
    bool ok() const;
};

ExperimentResult run_experiment(const Json& config, std::uint64_t seed, const std::filesystem::path& base,
                                const std::filesystem::path& out);

/// Runs every experiment into out/<id>/ and writes out/manifest.json. Returns 0 when every
/// criterion passes, 1 otherwise.
int run(const RunConfig& cfg, const std::filesystem::path& out);

// ---- reports ---------------------------------------------------------------

/// %.17g, or an empty cell for NaN.
std::string csv_number(double v);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    CsvWriter& row(const std::vector<std::string>& cells);

private:
    std::ofstream os_;
};

}  // namespace lab
