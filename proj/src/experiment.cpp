#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sgn/errors.hpp"
#include "sgn/harness.hpp"

namespace sgn {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
void read_optional(const json& obj, const char* key, std::optional<T>& out) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
    return;
  }
  T value{};
  read(obj, key, value);
  out = value;
}

SampleKind parse_kind(const std::string& s) {
  if (s == "row_compression") return SampleKind::row_compression;
  if (s == "entry_sparsification") return SampleKind::entry_sparsification;
  if (s == "sum_subsampling") return SampleKind::sum_subsampling;
  throw ConfigError("unknown sample kind '" + s + "'");
}

ProbabilityMode parse_mode(const std::string& s) {
  if (s == "uniform") return ProbabilityMode::uniform;
  if (s == "importance") return ProbabilityMode::importance;
  throw ConfigError("unknown probability mode '" + s + "'");
}

void parse_plan(const json& j, SamplePlan& plan) {
  reject_unknown(j,
                 {"kind", "probability_mode", "alpha", "delta", "gamma", "m_max", "min_fraction", "fixed_density",
                  "keep_diagonal", "total_scaling", "gradient_floor"},
                 "sample_plan");
  if (j.contains("kind")) plan.kind = parse_kind(j.at("kind").get<std::string>());
  if (j.contains("probability_mode")) plan.probability_mode = parse_mode(j.at("probability_mode").get<std::string>());
  read(j, "alpha", plan.alpha);
  read(j, "delta", plan.delta);
  read(j, "gamma", plan.gamma);
  read_optional(j, "m_max", plan.m_max);
  read(j, "min_fraction", plan.min_fraction);
  read_optional(j, "fixed_density", plan.fixed_density);
  read(j, "keep_diagonal", plan.keep_diagonal);
  read_optional(j, "total_scaling", plan.total_scaling);
  read(j, "gradient_floor", plan.gradient_floor);
}

void parse_stop(const json& j, StopRules& stop) {
  reject_unknown(j, {"epsilon_F", "budget_full_jacobian_evals", "chi", "patience_full_evals", "max_iterations"}, "stop");
  read(j, "epsilon_F", stop.epsilon_F);
  read_optional(j, "budget_full_jacobian_evals", stop.budget_full_jacobian_evals);
  read_optional(j, "chi", stop.chi);
  read(j, "patience_full_evals", stop.patience_full_evals);
  read(j, "max_iterations", stop.max_iterations);
}

void parse_solver(const json& j, SolverConfig& s) {
  reject_unknown(j,
                 {"c", "tau", "t_max", "t0", "eta_bar", "lambda", "sample_plan", "stop", "sigma_min", "sigma_max",
                  "diagnostics", "cost_variant", "max_inner", "seed", "hitting_epsilons", "x0"},
                 "solver");
  read(j, "c", s.c);
  read(j, "tau", s.tau);
  read(j, "t_max", s.t_max);
  read(j, "t0", s.t0);
  read(j, "eta_bar", s.eta_bar);
  read_optional(j, "lambda", s.lambda);
  if (j.contains("sample_plan")) parse_plan(j.at("sample_plan"), s.sample_plan);
  if (j.contains("stop")) parse_stop(j.at("stop"), s.stop);
  read_optional(j, "sigma_min", s.sigma_min);
  read_optional(j, "sigma_max", s.sigma_max);
  read(j, "diagnostics", s.diagnostics);
  if (j.contains("cost_variant") && !j.at("cost_variant").is_null())
    s.cost_variant = parse_cost_variant(j.at("cost_variant").get<std::string>());
  read(j, "max_inner", s.max_inner);
  read(j, "seed", s.seed);
  read(j, "hitting_epsilons", s.hitting_epsilons);
  read_optional(j, "x0", s.x0);
}

void parse_problem(const json& j, ProblemSpec& p) {
  reject_unknown(j,
                 {"family", "n", "ie_form", "scaling", "data_path", "validation_path", "feature_count", "examples",
                  "validation_examples", "synthetic", "margin", "data_seed"},
                 "problem");
  read(j, "family", p.family);
  read(j, "n", p.n);
  if (j.contains("ie_form")) {
    const auto f = j.at("ie_form").get<std::string>();
    if (f == "unweighted")
      p.ie_form = IeForm::unweighted;
    else if (f == "quadrature_weighted")
      p.ie_form = IeForm::quadrature_weighted;
    else
      throw ConfigError("unknown ie_form '" + f + "'");
  }
  if (j.contains("scaling")) {
    const auto f = j.at("scaling").get<std::string>();
    if (f == "mean_half")
      p.scaling = LsScaling::mean_half;
    else if (f == "sum_squares")
      p.scaling = LsScaling::sum_squares;
    else
      throw ConfigError("unknown scaling '" + f + "'");
  }
  std::optional<std::string> path;
  read_optional(j, "data_path", path);
  if (path) p.data_path = *path;
  path.reset();
  read_optional(j, "validation_path", path);
  if (path) p.validation_path = *path;
  read_optional(j, "feature_count", p.feature_count);
  read(j, "examples", p.examples);
  read(j, "validation_examples", p.validation_examples);
  read(j, "synthetic", p.synthetic);
  read(j, "margin", p.margin);
  read(j, "data_seed", p.data_seed);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

const std::set<std::string> kGridKeys = {"alpha", "eta", "gamma", "m_max", "s", "xi", "lambda"};

Dataset take_rows(const Dataset& data, std::size_t begin, std::size_t end) {
  std::vector<Triplet> triplets;
  Dataset out;
  for (std::size_t i = begin; i < end; ++i) {
    auto c = data.features.row_columns(i);
    auto v = data.features.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) triplets.push_back({i - begin, c[k], v[k]});
    out.labels.push_back(data.labels[i]);
  }
  out.features = assemble_sparse(triplets, end - begin, data.feature_count());
  return out;
}

}  // namespace

ProblemPtr make_problem(const ProblemSpec& spec) {
  if (spec.family == "ie") return ie_problem(spec.n, spec.ie_form);
  if (spec.family != "sigmoid_ls" && spec.family != "softmax") throw ConfigError("unknown problem family '" + spec.family + "'");

  auto data = std::make_shared<Dataset>();
  if (spec.data_path) {
    *data = libsvm_load(*spec.data_path, spec.feature_count);
    if (spec.validation_path)
      data->validation =
          std::make_shared<const Dataset>(libsvm_load(*spec.validation_path, data->feature_count()));
  } else {
    if (spec.examples == 0 || spec.n == 0) throw ConfigError("synthetic dataset needs examples and n");
    Rng rng = make_rng(spec.data_seed);
    const std::size_t total = spec.examples + spec.validation_examples;
    Dataset all;
    if (spec.synthetic == "separable")
      all = make_separable_dataset(total, spec.n, spec.margin, rng);
    else if (spec.synthetic == "logistic")
      all = make_logistic_dataset(total, spec.n, rng);
    else
      throw ConfigError("unknown synthetic dataset '" + spec.synthetic + "'");
    *data = take_rows(all, 0, spec.examples);
    if (spec.validation_examples > 0)
      data->validation = std::make_shared<const Dataset>(take_rows(all, spec.examples, total));
  }
  if (spec.family == "sigmoid_ls") return sigmoid_ls_problem(data, spec.scaling);
  return softmax_problem(data);
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  for (const auto& [key, values] : grid) {
    if (!kGridKeys.count(key)) throw ConfigError("unknown grid parameter '" + key + "'");
    if (values.empty()) throw ConfigError("grid parameter '" + key + "' has no values");
  }
  for (const auto& point : expand_grid(grid)) {
    SolverConfig s = solver;
    apply_grid_point(point, s);
    s.validate();
  }
}

void parse_problem_and_solver(const std::string& json_text, ProblemSpec& problem, SolverConfig& solver) {
  const json j = parse_json(json_text);
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.contains("problem")) parse_problem(j.at("problem"), problem);
  if (j.contains("solver")) parse_solver(j.at("solver"), solver);
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  reject_unknown(j, {"problem", "solver", "grid", "replicates", "seed_base", "seed_stride", "output"}, "config");
  ExperimentConfig cfg;
  if (j.contains("problem")) parse_problem(j.at("problem"), cfg.problem);
  if (j.contains("solver")) parse_solver(j.at("solver"), cfg.solver);
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (!g.is_object()) throw ConfigError("grid must be an object of arrays");
    for (const auto& [key, values] : g.items()) {
      std::vector<double> v;
      try {
        v = values.get<std::vector<double>>();
      } catch (const json::exception&) {
        throw ConfigError("grid parameter '" + key + "' must be an array of numbers");
      }
      cfg.grid[key] = std::move(v);
    }
  }
  read(j, "replicates", cfg.replicates);
  read(j, "seed_base", cfg.seed_base);
  read(j, "seed_stride", cfg.seed_stride);
  std::string output = cfg.output.string();
  read(j, "output", output);
  cfg.output = output;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string GridPoint::param_string() const {
  std::string s;
  for (const auto& [k, v] : values) {
    if (!s.empty()) s += ';';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%g", k.c_str(), v);
    s += buf;
  }
  return s.empty() ? "default" : s;
}

std::vector<GridPoint> expand_grid(const std::map<std::string, std::vector<double>>& grid) {
  std::vector<GridPoint> points(1);
  for (const auto& [key, values] : grid) {
    std::vector<GridPoint> next;
    for (const auto& p : points)
      for (double v : values) {
        GridPoint q = p;
        q.values[key] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

void apply_grid_point(const GridPoint& point, SolverConfig& config) {
  for (const auto& [key, v] : point.values) {
    if (key == "alpha")
      config.sample_plan.alpha = v;
    else if (key == "eta")
      config.eta_bar = v;
    else if (key == "gamma")
      config.sample_plan.gamma = v;
    else if (key == "m_max") {
      if (!(v >= 1.0)) throw ConfigError("m_max must be at least 1");
      config.sample_plan.m_max = static_cast<std::size_t>(std::llround(v));
    } else if (key == "s")
      config.sample_plan.fixed_density = v;
    else if (key == "xi")
      config.sample_plan.min_fraction = v;
    else if (key == "lambda")
      config.lambda = v;
    else
      throw ConfigError("unknown grid parameter '" + key + "'");
  }
}

std::size_t median_replicate(const std::vector<ReplicateResult>& replicates) {
  if (replicates.empty()) throw std::invalid_argument("median_replicate: no replicates");
  std::vector<std::size_t> order(replicates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = replicates[a];
    const auto& rb = replicates[b];
    if (ra.trace.total_cost != rb.trace.total_cost) return ra.trace.total_cost < rb.trace.total_cost;
    return ra.seed < rb.seed;
  });
  return order[(order.size() - 1) / 2];
}

std::vector<GridSummary> run_grid(const ProblemPtr& problem, const ExperimentConfig& config) {
  config.validate();
  const Dataset* validation = problem->validation_data();
  std::vector<GridSummary> summaries;
  const auto points = expand_grid(config.grid);
  for (std::size_t g = 0; g < points.size(); ++g) {
    GridSummary summary;
    summary.grid_id = g;
    summary.param_string = points[g].param_string();
    for (std::size_t r = 0; r < config.replicates; ++r) {
      SolverConfig s = config.solver;
      apply_grid_point(points[g], s);
      ReplicateResult result;
      result.seed = config.seed_base + config.seed_stride * r;
      s.seed = result.seed;
      if (validation) {
        auto* acc = &result.accuracy;
        s.observer = [acc, validation](const IterationRecord&, std::span<const double> x) {
          acc->push_back(classification_accuracy(x, *validation));
        };
      }
      result.trace = sgn_run(problem, s);
      if (validation) result.accuracy.insert(result.accuracy.begin(), classification_accuracy(result.trace.x_initial, *validation));
      summary.replicates.push_back(std::move(result));
    }
    summary.median_index = median_replicate(summary.replicates);
    const auto& med = summary.replicates[summary.median_index].trace;
    summary.median_cost = med.total_cost;
    summary.median_iters = med.iterations();
    summary.min_cost = summary.max_cost = med.total_cost;
    for (const auto& rep : summary.replicates) {
      summary.min_cost = std::min(summary.min_cost, rep.trace.total_cost);
      summary.max_cost = std::max(summary.max_cost, rep.trace.total_cost);
    }
    summaries.push_back(std::move(summary));
  }
  return summaries;
}

void write_summary_csv(const std::vector<GridSummary>& summaries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "grid_id,param_string,median_cost,median_iters,min_cost,max_cost\n";
  for (const auto& s : summaries)
    out << s.grid_id << ',' << s.param_string << ',' << format_real(s.median_cost) << ',' << s.median_iters << ','
        << format_real(s.min_cost) << ',' << format_real(s.max_cost) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_plot_csv(const ReplicateResult& run, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const bool with_accuracy = !run.accuracy.empty();
  out << "cost,log10_residual_norm" << (with_accuracy ? ",accuracy" : "") << '\n';
  const auto& recs = run.trace.records;
  for (std::size_t p = 0; p <= recs.size(); ++p) {
    const double cost = p == 0 ? 0.0 : recs[p - 1].cumulative_cost;
    const double rnorm = p < recs.size() ? recs[p].residual_norm : run.trace.residual_norm_final;
    out << format_real(cost) << ',' << format_real(std::log10(rnorm));
    if (with_accuracy) out << ',' << format_real(run.accuracy[p]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<GridSummary> experiment_run(const ExperimentConfig& config) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(config.output, ec);
  if (ec) throw IoError("cannot create output directory " + config.output.string() + ": " + ec.message());
  {
    const auto probe = config.output / ".write_probe";
    std::ofstream out(probe);
    if (!out) throw IoError("output directory " + config.output.string() + " is not writable");
    out.close();
    std::filesystem::remove(probe, ec);
  }
  const ProblemPtr problem = make_problem(config.problem);
  auto summaries = run_grid(problem, config);
  for (const auto& s : summaries) {
    for (std::size_t r = 0; r < s.replicates.size(); ++r)
      write_trace_csv(s.replicates[r].trace,
                      config.output / ("trace_g" + std::to_string(s.grid_id) + "_r" + std::to_string(r) + ".csv"));
    write_plot_csv(s.replicates[s.median_index], config.output / ("plot_g" + std::to_string(s.grid_id) + ".csv"));
  }
  write_summary_csv(summaries, config.output / "summary.csv");
  return summaries;
}

}  // namespace sgn
