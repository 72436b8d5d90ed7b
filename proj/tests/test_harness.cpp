#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include <obal/harness.hpp>

#include "test_util.hpp"

using namespace obal;
using namespace obal::harness;
namespace fs = std::filesystem;

namespace {

std::vector<GrowthSample> closed_form(double (*f)(double)) {
  std::vector<GrowthSample> out;
  for (int e = 10; e <= 16; ++e) {
    const double T = std::ldexp(1.0, e);
    out.push_back({std::uint64_t(T), {f(T)}});
  }
  return out;
}

// ordinary least squares slope, written out independently
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ExperimentConfig interval_cfg(std::uint64_t T, std::uint64_t trials) {
  ExperimentConfig c;
  c.command = "interval";
  c.dim = 1;
  c.T_grid = {T};
  c.trials = trials;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BALANCER_EXE) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(FitGrowth, SquareRootGivesHalf) {
  auto fit = fit_growth(closed_form([](double T) { return std::sqrt(T); }));
  EXPECT_NEAR(fit.exponent, 0.5, 1e-9);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-9);
  EXPECT_NEAR(fit.residual, 0.0, 1e-9);
  EXPECT_EQ(fit.medians.size(), 7u);
}

TEST(FitGrowth, MatchesIndependentLeastSquares) {
  auto samples = closed_form([](double T) { return std::pow(std::log(T), 2); });
  std::vector<double> x, y;
  for (const auto& s : samples) x.push_back(std::log(double(s.T))), y.push_back(std::log(s.values[0]));
  EXPECT_NEAR(fit_growth(samples).exponent, ols_slope(x, y), 1e-12);
}

TEST(FitGrowth, SquaredLogIsFlat) {
  auto fit = fit_growth(closed_form([](double T) { return std::pow(std::log(T), 2); }));
  EXPECT_LE(fit.exponent, 0.15);
}

TEST(FitGrowth, UsesMediansAndRejectsDegenerateGrids) {
  std::vector<GrowthSample> s{{4, {1, 100, 2}}, {8, {4}}, {16, {8}}, {32, {16}}};
  auto fit = fit_growth(s);
  EXPECT_EQ(fit.medians[0].second, 2.0);
  EXPECT_NEAR(fit.exponent, 1.0, 1e-12);
  EXPECT_THROW(fit_growth({{4, {1}}, {8, {2}}, {16, {3}}}), DomainError);
  EXPECT_THROW(fit_growth({{4, {1}}, {8, {2}}, {16, {3}}, {32, {0}}}), DomainError);
  EXPECT_THROW(fit_growth({{1, {1}}, {8, {2}}, {16, {3}}, {32, {4}}}), DomainError);
  EXPECT_TRUE(fit.to_json().contains("exponent"));
}

TEST(FitGrowth, RandomIntervalColoringGrowsLikeSquareRoot) {
  auto cfg = interval_cfg(0, 20);
  cfg.T_grid = {1u << 8, 1u << 9, 1u << 10, 1u << 11, 1u << 12, 1u << 13, 1u << 14};
  cfg.algorithm = "random";
  auto rep = run_experiment(cfg);
  ASSERT_EQ(rep.exit_code(), 0);
  auto fit = fit_growth(growth_samples(rep));
  EXPECT_GE(fit.exponent, 0.4);
  EXPECT_LE(fit.exponent, 0.6);
}

TEST(RunExperiment, EmptyHorizon) {
  auto cfg = interval_cfg(0, 1);
  cfg.output_dir = testutil::temp_path("empty").string();
  auto rep = run_experiment(cfg);
  EXPECT_EQ(rep.exit_code(), 0);
  ASSERT_EQ(rep.outcomes.size(), 1u);
  EXPECT_EQ(testutil::slurp(fs::path(cfg.output_dir) / "interval_T0_seed0_cosh.csv"), "t,linf,phi\n");
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "aggregate.csv"));
}

TEST(RunExperiment, ReplayIsByteIdentical) {
  for (std::string cmd : {"interval", "tusnady", "envy", "balance", "sphere", "adversary"}) {
    ExperimentConfig cfg;
    cfg.command = cmd;
    cfg.dim = cmd == "tusnady" || cmd == "interval" ? 2 : 4;
    cfg.T_grid = {64, 128};
    cfg.trials = 3;
    cfg.probe_count = 20;
    cfg.stride = 8;
    if (cmd == "balance") cfg.spec = json{{"kind", "unit-sphere"}, {"dim", 4}};
    auto a = cfg, b = cfg;
    a.output_dir = testutil::temp_path("replay_a").string();
    b.output_dir = testutil::temp_path("replay_b").string();
    ASSERT_EQ(run_experiment(a).exit_code(), 0) << cmd;
    ASSERT_EQ(run_experiment(b).exit_code(), 0) << cmd;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a.output_dir)) {
      const auto other = fs::path(b.output_dir) / entry.path().filename();
      ASSERT_TRUE(fs::exists(other)) << other;
      EXPECT_EQ(testutil::slurp(entry.path()), testutil::slurp(other)) << entry.path().filename();
      ++files;
    }
    EXPECT_EQ(files, 2u * 6 + 1) << cmd;
  }
}

TEST(RunExperiment, ProbeAgreementsAreCounted) {
  auto cfg = interval_cfg(1024, 1);
  cfg.probe_count = 500;
  auto rep = run_experiment(cfg);
  ASSERT_EQ(rep.exit_code(), 0);
  EXPECT_EQ(rep.outcomes[0].probes_checked, 500u);
  EXPECT_EQ(rep.outcomes[0].summary["probe_agreements"], 500);
  std::ostringstream csv;
  write_aggregate_csv(csv, rep.outcomes);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "command,T,seed,algorithm,metric,steps,probes");
  EXPECT_NE(csv.str().find(",1024,500\n"), std::string::npos);
}

TEST(RunExperiment, FailuresCarryProvenance) {
  ExperimentConfig cfg;
  cfg.command = "balance";
  cfg.spec = json{{"kind", "unit-sphere"}, {"dim", 3}};
  cfg.general = true;  // exact covariance needs finite support
  cfg.T_grid = {16};
  cfg.trials = 2;
  auto rep = run_experiment(cfg);
  EXPECT_EQ(rep.exit_code(), 1);
  ASSERT_EQ(rep.failures.size(), 2u);
  EXPECT_NE(rep.failures[0].find("balance T=16 seed=0"), std::string::npos);
}

TEST(RunExperiment, StrideDoesNotMoveTheMetric) {
  auto a = interval_cfg(512, 2), b = a;
  b.stride = 50;
  auto ra = run_experiment(a), rb = run_experiment(b);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(ra.outcomes[i].metric, rb.outcomes[i].metric);
    EXPECT_EQ(ra.outcomes[i].summary.dump(), rb.outcomes[i].summary.dump());
  }
}

TEST(Compare, SelfPairingGivesIdenticalColumns) {
  auto cfg = interval_cfg(512, 5);
  auto t = compare(cfg, {"cosh", "cosh"});
  ASSERT_EQ(t.rows.size(), 5u);
  for (const auto& r : t.rows) EXPECT_EQ(r.values[0], r.values[1]);
  EXPECT_EQ(t.fraction_at_most(0, 1), 1.0);
  std::ostringstream csv;
  t.write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, 16), "seed,cosh,cosh\n0");
}

TEST(Compare, SignerBeatsRandomOnSharedStreams) {
  auto cfg = interval_cfg(1u << 14, 20);
  auto t = compare(cfg, {"cosh", "random"});
  EXPECT_GE(t.fraction_at_most(0, 1), 0.9);
}

TEST(Compare, AdaptiveAdversaryRefusesPairing) {
  ExperimentConfig cfg;
  cfg.command = "adversary";
  cfg.dim = 4;
  cfg.T_grid = {64};
  EXPECT_THROW(compare(cfg, {"cosh", "random"}), UnsupportedMode);
  EXPECT_THROW(compare(interval_cfg(64, 1), {}), InvalidSpec);
}

TEST(Config, JsonRoundTripAndOverrides) {
  ExperimentConfig cfg;
  cfg.command = "envy";
  cfg.T_grid = {256, 512};
  cfg.trials = 4;
  cfg.lambda = 0.05;
  cfg.envy_mode = "ordinal";
  auto back = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json().dump(), cfg.to_json().dump());

  ExperimentConfig base;
  base.trials = 9;
  base.merge_json(json{{"format_version", 1}, {"T_grid", {32}}});
  EXPECT_EQ(base.trials, 9u);
  EXPECT_EQ(base.T_grid, std::vector<std::uint64_t>{32});
}

TEST(Config, Rejections) {
  EXPECT_THROW(ExperimentConfig::from_json(json{{"command", "interval"}}), InvalidSpec);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"format_version", 2}}), InvalidSpec);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"format_version", 1}, {"trials", "many"}}), InvalidSpec);
  auto bad = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](auto& c) { c.trials = 0; }).validate(), InvalidSpec);
  EXPECT_THROW(bad([](auto& c) { c.T_grid = {100}; }).validate(), InvalidSpec);
  EXPECT_THROW(bad([](auto& c) { c.T_grid = {64, 32}; }).validate(), InvalidSpec);
  EXPECT_THROW(bad([](auto& c) { c.T_grid = {}; }).validate(), InvalidSpec);
  EXPECT_THROW(bad([](auto& c) { c.command = "fractal"; }).validate(), InvalidSpec);
  EXPECT_THROW(bad([](auto& c) { c.command = "balance"; }).validate(), InvalidSpec);
  EXPECT_THROW(bad([](auto& c) { c.algorithm = "best"; }).validate(), InvalidSpec);
  EXPECT_THROW(bad([](auto& c) { c.covariance = "guess"; }).validate(), InvalidSpec);
  EXPECT_THROW(read_json_file("/nonexistent/obal.json"), InvalidSpec);
  EXPECT_THROW(read_json_file(testutil::write_file("broken.json", "{")), InvalidSpec);
}

TEST(Specs, JsonKinds) {
  auto fs1 = spec_from_json(json::parse(R"({"kind":"finite-support","dim":3,
      "atoms":[{"p":0.5,"entries":[[0,1.0],[2,-0.5]]},{"p":0.5,"entries":[[1,1.0]]}]})"));
  EXPECT_EQ(fs1.sparsity, 2u);
  EXPECT_EQ(spec_from_json(spec_to_json(fs1)).atoms()[0].update, fs1.atoms()[0].update);
  EXPECT_EQ(spec_from_json(json{{"kind", "hadamard-rows"}, {"dim", 8}}).kind_name(), "hadamard-rows");
  EXPECT_EQ(spec_from_json(json{{"kind", "unit-sphere"}, {"dim", 3}}).sparsity, 3u);
  EXPECT_THROW(spec_from_json(json{{"kind", "gaussian"}, {"dim", 3}}), InvalidSpec);
  EXPECT_THROW(spec_from_json(json::array()), InvalidSpec);

  auto corr = correlated_spec(4);
  auto P = spectral::estimate_covariance(corr, spectral::CovarianceMode::exact(), SeededRng(0)).P;
  EXPECT_DOUBLE_EQ(P(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(P(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(P(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(P(0, 3), 0.5);
  auto unc = spectral::estimate_covariance(uncorrelated_spec(8), spectral::CovarianceMode::exact(), SeededRng(0)).P;
  EXPECT_EQ(unc.max_abs_off_diagonal(), 0.0);
}

TEST(ParallelMap, KeepsIndexOrderAndFirstError) {
  auto out = parallel_map<int>(100, [](std::size_t i) { return int(i * i); }, 8);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(out[i], i * i);
  try {
    parallel_map<int>(
        50,
        [](std::size_t i) -> int {
          if (i == 7 || i == 31) throw DomainError("index " + std::to_string(i));
          return 0;
        },
        4);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "index 7");
  }
  EXPECT_TRUE(parallel_map<int>(0, [](std::size_t) { return 1; }).empty());
}

TEST(ParallelMap, WorkerCountFromEnvironment) {
  ::setenv("BALANCER_WORKERS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  ::setenv("BALANCER_WORKERS", "zero", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("BALANCER_WORKERS");
}

TEST(Regression, TableRoundTrip) {
  RegressionTable t;
  t.entries["x"] = {10.0, 0.2, "ten"};
  const auto path = testutil::temp_path("table.json").string();
  t.save(path);
  auto back = RegressionTable::load(path);
  EXPECT_EQ(back.entries.at("x").description, "ten");
  EXPECT_TRUE(back.within("x", 12.0));
  EXPECT_TRUE(back.within("x", 8.0));
  EXPECT_FALSE(back.within("x", 12.5));
  EXPECT_THROW(back.within("y", 1.0), InvalidSpec);
  EXPECT_THROW(RegressionTable::load(testutil::write_file("v2.json", R"({"format_version":2,"entries":{}})")),
               InvalidSpec);
}

TEST(Regression, CheckedInTableHasEveryMeasurement) {
  auto t = RegressionTable::load(std::string(OBAL_SOURCE_DIR) + "/data/regression_constants.json");
  for (const char* name : {"interval_d1_T16384", "tusnady_d2_T1024", "general_n8_correlated_T4096", "cardinal_envy_T4096"}) {
    ASSERT_TRUE(t.entries.count(name)) << name;
    EXPECT_GT(t.entries.at(name).value, 0.0);
    EXPECT_DOUBLE_EQ(t.entries.at(name).slack, 0.2);
  }
}

TEST(Cli, Smoke) {
  const auto out = testutil::temp_path("cli");
  EXPECT_EQ(run_cli("interval --d 1 --T 256 --trials 2 --probe-count 10 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "aggregate.csv"));
  EXPECT_TRUE(fs::exists(out / "interval_T256_seed1_cosh.json"));
  EXPECT_EQ(run_cli("fractal --h 6 --magnitude 2"), 0);
  EXPECT_EQ(run_cli("anticonc --family counterexample --delta 0.1"), 0);
  EXPECT_EQ(run_cli("lowerbound --n 4 --trials 5"), 0);
  EXPECT_EQ(run_cli("compare --command adversary --n 4 --T 64"), 1);
  EXPECT_NE(run_cli("interval --T 100"), 0);
  EXPECT_NE(run_cli("nonsense"), 0);
  const auto cfg = testutil::write_file("cli.json", R"({"format_version": 1, "command": "interval", "T_grid": [64], "trials": 1})");
  EXPECT_EQ(run_cli("interval --T 100 --config " + cfg), 0);
  const auto bad = testutil::write_file("bad.json", R"({"format_version": 7})");
  EXPECT_NE(run_cli("interval --config " + bad), 0);
}
