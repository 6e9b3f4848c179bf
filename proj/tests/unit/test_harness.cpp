#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgn/errors.hpp"
#include "sgn/harness.hpp"

using namespace sgn;

namespace {

Trace trace_with_norms(std::initializer_list<double> norms) {
  Trace t;
  std::size_t k = 0;
  for (double v : norms) {
    IterationRecord r;
    r.k = k++;
    r.grad_norm = v;
    r.residual_norm = v;
    t.records.push_back(r);
  }
  t.residual_norm_final = *(norms.end() - 1);
  return t;
}

ReplicateResult replicate(std::uint64_t seed, double cost) {
  ReplicateResult r;
  r.seed = seed;
  r.trace.total_cost = cost;
  return r;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sgn_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

const char* kSmallExperiment = R"({
  "problem": {"family": "ie", "n": 30},
  "solver": {"sample_plan": {"kind": "entry_sparsification", "keep_diagonal": true},
             "stop": {"max_iterations": 200}},
  "grid": {"s": [0.5, 1.0]},
  "replicates": 3,
  "output": "OUT"
})";

}  // namespace

TEST_CASE("hitting time") {
  const auto t = trace_with_norms({3, 2, 0.5});
  CHECK(hitting_time(t, 1.0, NormSelector::gradient) == 2);
  CHECK(hitting_time(t, 10.0, NormSelector::gradient) == 0);
  CHECK_FALSE(hitting_time(t, 0.1, NormSelector::gradient).has_value());
}

TEST_CASE("median replicate") {
  std::vector<ReplicateResult> reps{replicate(1, 10), replicate(2, 30), replicate(3, 20)};
  CHECK(reps[median_replicate(reps)].trace.total_cost == 20);
  std::reverse(reps.begin(), reps.end());
  CHECK(reps[median_replicate(reps)].trace.total_cost == 20);
  std::vector<ReplicateResult> even{replicate(4, 40), replicate(1, 10), replicate(3, 30), replicate(2, 20)};
  CHECK(even[median_replicate(even)].trace.total_cost == 20);
  std::vector<ReplicateResult> ties{replicate(7, 5), replicate(3, 5), replicate(5, 5)};
  CHECK(ties[median_replicate(ties)].seed == 5);
}

TEST_CASE("trace CSV round trip") {
  const auto p = ie_problem(30);
  SolverConfig cfg;
  cfg.sample_plan.kind = SampleKind::entry_sparsification;
  cfg.sample_plan.fixed_density = 0.5;
  const auto tr = sgn_run(p, cfg);
  std::stringstream s;
  write_trace_csv(tr, s);
  const std::string text = s.str();
  CHECK(text.rfind("k,t_k,success,f,grad_norm,residual_norm,sample_size,inner_iterations,cost_increment,cumulative_cost\n",
                   0) == 0);
  const auto back = read_trace_csv(s);
  REQUIRE(back.iterations() == tr.iterations());
  for (std::size_t k = 0; k < tr.iterations(); ++k) {
    CHECK(back.records[k].f == tr.records[k].f);
    CHECK(back.records[k].t == tr.records[k].t);
    CHECK(back.records[k].cumulative_cost == tr.records[k].cumulative_cost);
  }
  std::istringstream bad("k,t_k\n1,2\n");
  CHECK_THROWS(read_trace_csv(bad));
}

TEST_CASE("experiment configuration") {
  const auto cfg = parse_experiment_config(kSmallExperiment);
  CHECK(cfg.problem.family == "ie");
  CHECK(cfg.problem.n == 30);
  CHECK(cfg.replicates == 3);
  CHECK(cfg.solver.sample_plan.kind == SampleKind::entry_sparsification);
  const auto grid = expand_grid(cfg.grid);
  REQUIRE(grid.size() == 2);
  CHECK(grid[0].param_string() == "s=0.5");
  SolverConfig s = cfg.solver;
  apply_grid_point(grid[0], s);
  CHECK(s.sample_plan.fixed_density == 0.5);

  CHECK_THROWS_AS(parse_experiment_config(R"({"replicate": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"solver": {"tau": "half"}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"grid": {"beta": [1]}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"solver": {"cost_variant": "fast"}})"), ConfigError);
  CHECK_THROWS_AS(make_problem(ProblemSpec{.family = "quadratic"}), ConfigError);
}

TEST_CASE("experiment run writes artifacts") {
  const auto dir = temp_dir("bench");
  std::string text = kSmallExperiment;
  text.replace(text.find("OUT"), 3, dir.string());
  const auto cfg = parse_experiment_config(text);
  const auto summaries = experiment_run(cfg);
  REQUIRE(summaries.size() == 2);
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  CHECK(std::filesystem::exists(dir / "trace_g0_r2.csv"));
  CHECK(std::filesystem::exists(dir / "plot_g1.csv"));
  std::ifstream in(dir / "summary.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "grid_id,param_string,median_cost,median_iters,min_cost,max_cost");
  for (const auto& s : summaries) CHECK(s.min_cost <= s.median_cost);

  SUBCASE("identical seeds give identical replicates") {
    auto same = cfg;
    same.seed_stride = 0;
    same.grid = {{"s", {0.5}}};
    const auto r = experiment_run(same);
    CHECK(r[0].min_cost == r[0].max_cost);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("unwritable output is rejected before running") {
  const auto blocker = temp_dir("blocker");
  std::ofstream(blocker) << "file";
  std::string text = kSmallExperiment;
  text.replace(text.find("OUT"), 3, (blocker / "sub").string());
  CHECK_THROWS_AS(experiment_run(parse_experiment_config(text)), IoError);
  std::filesystem::remove(blocker);
}
