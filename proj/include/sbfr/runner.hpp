// runner.hpp — experiment orchestration for the CLI commands and the stable
// on-disk formats (potential dumps, CSV schemas, JSON-lines run log).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbfr/config.hpp"
#include "sbfr/lattice.hpp"
#include "sbfr/oracles.hpp"
#include "sbfr/solver.hpp"

namespace sbfr {

// ---- potential dump format: "SBFR-POTENTIAL v1" header, dim line, one
// "box lo hi n" line per axis, then node values row-major, 17 significant
// digits. Lossless for doubles.
std::string write_potential(const LatticeFunction& f);
LatticeFunction read_potential(const std::string& text);
void write_potential_file(const LatticeFunction& f, const std::string& path);
LatticeFunction read_potential_file(const std::string& path);

// ---- CSV-based matrix format for grid problems.
std::string write_grid_problem(const GridProblem& p);
GridProblem read_grid_problem(const std::string& text);

// ---- builders from config blocks.
DiffusionModel model_from_config(const ModelBlock& block);
Marginal marginal_from_config(const MarginalBlock& block, int dim, const std::string& base_dir);
// Solver block -> SolverConfig; bounds derived from the model when omitted.
SolverConfig solver_from_config(const RunConfig& config, const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT);

// ---- convergence study: one row per (N, seed) against the grid oracle.
struct StudyRow {
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    int iterations = 0;
    double dH_to_oracle = 0.0;
    double sup_error = 0.0;
    double kappa_hat = 0.0;
    double bandwidth = 0.0;
    std::int64_t runtime_ms = 0;
    std::vector<double> increments;  // iteration trace (not part of the CSV)
};

std::vector<StudyRow> run_study(const DiffusionModel& model, const Marginal& rho0, const Marginal& rhoT,
                                const SolverConfig& base, const std::vector<std::uint64_t>& n_values, int seeds,
                                int oracle_nodes);

// Pinned column schema: N,seed,iterations,dH_to_oracle,sup_error,kappa_hat,bandwidth,runtime_ms
std::string study_csv(const std::vector<StudyRow>& rows);
// The same rows with the volatile runtime_ms column blanked, for byte
// comparisons across reruns.
std::string study_csv_stable(const std::vector<StudyRow>& rows);

// ---- command dispatch. Returns the process exit code: 0 success, 1
// numerical failure (non-convergence, insufficient overlap), 2 config error.
int execute(const RunConfig& config);
// Convenience wrapper: reads, parses and executes; maps errors to exit codes.
int execute_file(const std::string& config_path);

}  // namespace sbfr
