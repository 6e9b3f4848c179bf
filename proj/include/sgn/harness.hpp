#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgn/cost.hpp"
#include "sgn/solver.hpp"

namespace sgn {

enum class NormSelector { gradient, residual };

// First k whose recorded norm is <= epsilon. For the residual selector the state after the last
// record counts as k = records.size().
std::optional<std::size_t> hitting_time(const Trace& trace, double epsilon, NormSelector selector);

// Columns: k, t_k, success, f, grad_norm, residual_norm, sample_size, inner_iterations,
// cost_increment, cumulative_cost. Reals with 17 significant digits.
void write_trace_csv(const Trace& trace, std::ostream& out);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
// Restores the CSV columns of every record and total_cost; throws IoError on malformed input.
Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::filesystem::path& path);

struct ProblemSpec {
  std::string family = "ie";  // ie | sigmoid_ls | softmax
  std::size_t n = 100;        // ie size, synthetic feature count
  IeForm ie_form = IeForm::unweighted;
  LsScaling scaling = LsScaling::mean_half;
  // dataset from file ...
  std::optional<std::filesystem::path> data_path;
  std::optional<std::filesystem::path> validation_path;
  std::optional<std::size_t> feature_count;
  // ... or synthetic
  std::size_t examples = 1000;
  std::size_t validation_examples = 0;
  std::string synthetic = "separable";  // separable | logistic
  double margin = 0.5;
  std::uint64_t data_seed = 7;
};

ProblemPtr make_problem(const ProblemSpec& spec);

struct ExperimentConfig {
  ProblemSpec problem;
  SolverConfig solver;
  // parameter name → values; cartesian product. Names: alpha, eta, gamma, m_max, s, xi, lambda.
  std::map<std::string, std::vector<double>> grid;
  std::size_t replicates = 1;
  std::uint64_t seed_base = 1;
  std::uint64_t seed_stride = 1;
  std::filesystem::path output = "out";

  void validate() const;
};

// Throws ConfigError on unknown keys or bad values, IoError if the file cannot be read.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Reads only the "problem" and "solver" sections (used by single runs).
void parse_problem_and_solver(const std::string& json_text, ProblemSpec& problem, SolverConfig& solver);

struct GridPoint {
  std::map<std::string, double> values;
  std::string param_string() const;
};
std::vector<GridPoint> expand_grid(const std::map<std::string, std::vector<double>>& grid);
void apply_grid_point(const GridPoint& point, SolverConfig& config);

struct ReplicateResult {
  std::uint64_t seed = 0;
  Trace trace;
  std::vector<double> accuracy;  // validation accuracy at x0 and after each iteration, when available
};

// Lower median by (total cost, seed).
std::size_t median_replicate(const std::vector<ReplicateResult>& replicates);

struct GridSummary {
  std::size_t grid_id = 0;
  std::string param_string;
  double median_cost = 0.0;
  std::size_t median_iters = 0;
  double min_cost = 0.0;
  double max_cost = 0.0;
  std::size_t median_index = 0;
  std::vector<ReplicateResult> replicates;
};

// Runs every grid point × replicate for an already-built problem. No files written.
std::vector<GridSummary> run_grid(const ProblemPtr& problem, const ExperimentConfig& config);

// Full protocol: runs, then writes trace_g<id>_r<rep>.csv, summary.csv and plot_g<id>.csv under output.
// The output directory is checked before any run starts.
std::vector<GridSummary> experiment_run(const ExperimentConfig& config);

void write_summary_csv(const std::vector<GridSummary>& summaries, const std::filesystem::path& path);
void write_plot_csv(const ReplicateResult& run, const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace sgn
