// config.hpp — run configuration: a strict sectioned key-value format
// ([section] headers, key = value lines, # comments, UTF-8). Unknown keys,
// unknown sections and duplicate keys are hard errors with line numbers.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbfr {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Command { solve, fdd, study, oracle };
enum class DensityKind { uniform, polynomial, lattice_file };

struct ModelBlock {
    std::string kind = "brownian";  // brownian | ou
    int dim = 1;
    double sigma = 1.0;
    double theta = 0.0;
    double horizon = 1.0;
    bool operator==(const ModelBlock&) const = default;
};

struct MarginalBlock {
    DensityKind kind = DensityKind::uniform;
    std::vector<double> box;        // lo1 hi1 lo2 hi2 ...
    std::vector<double> coeffs;     // polynomial in the per-axis coordinate u in [0,1]
    std::string file;               // lattice-file potential dump
    bool operator==(const MarginalBlock&) const = default;
};

struct SolverBlock {
    std::uint64_t cloud_size = 10000;
    int sde_steps = 64;
    double alpha = 1.0;
    double bandwidth = 0.0;  // 0: default bandwidth rule
    int k_max = 0;           // 0: auto cap from the rate rule
    double stop_tol = 1e-4;
    int lattice_nodes = 0;   // 0: default per dimension
    bool resample_per_iteration = false;
    int residual_mc = 0;
    std::string mode = "self_normalized";  // self_normalized | direct
    // 0 = derive from the closed-form model by lattice optimization.
    double q_min = 0.0, q_max = 0.0, Q_min = 0.0, Q_max = 0.0, rho_min = 0.0, rho_max = 0.0;
    bool operator==(const SolverBlock&) const = default;
};

struct FddBlock {
    double t_star = 0.0;  // 0: horizon / 2
    std::vector<double> forward_times;
    std::vector<double> reverse_times;
    double epsilon = 0.0;  // 0: bandwidth rule with N replaced by R
    std::uint64_t replications = 2000;
    std::uint64_t cloud_size = 2000;
    int sde_steps = 64;
    std::string functional = "one";  // one | mean | second_moment | indicator_box
    double functional_time = 0.0;
    int functional_axis = 0;
    std::vector<double> functional_box;
    std::string nu0 = "atom 0";  // "atom <coords>" | "file <path>"
    std::string nuT = "atom 0";
    bool operator==(const FddBlock&) const = default;
};

struct StudyBlock {
    std::vector<std::uint64_t> n_values;
    int seeds = 10;
    bool operator==(const StudyBlock&) const = default;
};

struct OracleBlock {
    int nodes = 64;
    double tol = 1e-12;
    int max_iter = 2000;
    bool compare_solver = false;
    bool operator==(const OracleBlock&) const = default;
};

struct OutputBlock {
    std::string directory = ".";
    std::string csv;      // study / fdd results
    std::string log;      // JSON-lines run log
    std::string prefix;   // potential dump file prefix
    bool operator==(const OutputBlock&) const = default;
};

struct RunConfig {
    Command command = Command::solve;
    std::uint64_t master_seed = 0;
    ModelBlock model;
    MarginalBlock rho0;
    MarginalBlock rhoT;
    SolverBlock solver;
    FddBlock fdd;
    StudyBlock study;
    OracleBlock oracle;
    OutputBlock output;
    bool operator==(const RunConfig&) const = default;
};

// Parses and fully validates the documented format; throws ConfigError with a
// line-numbered message.
RunConfig parse_config(const std::string& text);

// Canonical emission; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

}  // namespace sbfr
