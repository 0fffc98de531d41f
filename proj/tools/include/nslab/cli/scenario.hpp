#pragma once

// Scenario files: a small TOML subset (tables, key = value, strings,
// numbers, booleans, possibly nested and multi-line arrays, # comments)
// read into JSON and validated into a Scenario.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nslab/analysis.hpp"
#include "nslab/cli/expr.hpp"
#include "nslab/integrator.hpp"
#include "nslab/model.hpp"
#include "nslab/regions.hpp"

namespace nslab::cli {

/// A schema or precondition failure at a field path such as "run.alpha".
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Parses the TOML subset. Syntax errors carry the path "line N".
nlohmann::json parse_toml(const std::string& text);

enum class RunMethod { Hysteresis, Smoothing, Embedding, Filippov, Utkin };

std::string_view to_string(RunMethod m);

struct SystemBlock {
    std::vector<std::string> f_text;
    std::string g_text;
    std::vector<Expr> f;
    Expr g;
    double M = 1.0;
    std::size_t k = 1;
};

struct RunBlock {
    RunMethod method = RunMethod::Hysteresis;
    double alpha = 0.0;
    double epsilon = 0.0;
    double kappa = 0.0;
    double delta0 = 0.0;
    double T = 1.0;
    Vec x0;
    double y0 = 0.0;
    double u0 = 1.0;
    int mode0 = -1;
};

struct OutputBlock {
    std::string path;
    std::string format = "csv";
};

struct ConvergeBlock {
    Coupling coupling = Coupling::Hysteresis;
    std::vector<double> alphas;
    double kappa = 0.1;
    Correction correction = Correction::None;
    std::optional<SlidingKind> reference;
};

struct GridBlock {
    std::vector<Vec> x;
    double tol = 1e-10;
};

struct RegionBlock {
    RegionKind kind = RegionKind::Annulus;
    double alpha = 0.0;
    std::optional<double> kappa;
    double delta0 = 0.0;
    std::optional<double> delta;
    double v_bound = 0.0;
    std::size_t samples = 200;
};

struct Scenario {
    SystemBlock system;
    RunBlock run;
    IntegratorOptions integrator;
    OutputBlock output;
    std::optional<ConvergeBlock> converge;
    std::optional<GridBlock> grid;
    std::optional<RegionBlock> region;
    nlohmann::json source;  // the validated document

    /// The switched system the expressions describe.
    SwitchedSystem make_system() const;
};

/// Validates a parsed document. Throws ValidationError.
Scenario validate_scenario(const nlohmann::json& doc);

/// Reads, parses and validates a scenario file.
Scenario load_scenario(const std::string& path);

/// Reads a file and parses it, without validation.
nlohmann::json read_scenario_document(const std::string& path);

}  // namespace nslab::cli
