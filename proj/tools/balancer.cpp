// Command-line front end for the experiments in include/obal.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <obal/adversary.hpp>
#include <obal/anticonc.hpp>
#include <obal/harness.hpp>

using namespace obal;
using harness::ExperimentConfig;
using json = nlohmann::ordered_json;

namespace {

struct Flags {
  std::vector<std::uint64_t> T{1024};
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::uint64_t dim = 1;
  std::string algorithm = "cosh";
  std::uint64_t probe_count = 0;
  std::uint64_t stride = 1;
  std::optional<double> lambda;
  std::string config;
  std::string out;
  // balance
  std::string spec_file;
  std::string kind;
  bool general = false;
  std::string covariance = "exact";
  // envy
  std::string envy_mode = "cardinal";
  std::string valuations = "correlated";
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--T", f.T, "Horizon(s), powers of two; repeat or comma-separate for a grid")->delimiter(',');
  sub->add_option("--trials", f.trials, "Seeds per horizon");
  sub->add_option("--seed", f.seed, "First seed");
  sub->add_option("--algorithm", f.algorithm, "cosh | random");
  sub->add_option("--stride", f.stride, "Keep every stride-th step in trace files");
  sub->add_option("--lambda", f.lambda, "Override the potential's lambda");
  sub->add_option("--config", f.config, "JSON config; its keys override flags");
  sub->add_option("--out", f.out, "Directory for per-trial JSON/CSV and aggregate.csv");
}

void add_problem_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--d,--n", f.dim, "Dimension");
  sub->add_option("--probe-count", f.probe_count, "Random dyadic probes checked against direct counting");
  sub->add_option("--spec", f.spec_file, "Distribution spec (JSON file), balance only");
  sub->add_option("--kind", f.kind, "Spec preset instead of --spec: correlated, uncorrelated, unit-sphere, ...");
  sub->add_flag("--general", f.general, "Balance through the covariance eigenbasis");
  sub->add_option("--covariance", f.covariance, "exact | sampled");
  sub->add_option("--mode", f.envy_mode, "Envy: cardinal | ordinal");
  sub->add_option("--valuations", f.valuations, "Envy: independent | correlated");
}

ExperimentConfig build_config(const std::string& command, const Flags& f) {
  ExperimentConfig cfg;
  cfg.command = command;
  cfg.T_grid = f.T;
  cfg.trials = f.trials;
  cfg.seed_base = f.seed;
  cfg.dim = f.dim;
  cfg.algorithm = f.algorithm;
  cfg.probe_count = f.probe_count;
  cfg.stride = f.stride;
  cfg.lambda = f.lambda;
  cfg.general = f.general;
  cfg.covariance = f.covariance;
  cfg.envy_mode = f.envy_mode;
  cfg.valuation_model = f.valuations;
  cfg.output_dir = f.out;
  if (!f.spec_file.empty()) cfg.spec = harness::read_json_file(f.spec_file);
  else if (!f.kind.empty()) cfg.spec = json{{"kind", f.kind}, {"dim", f.dim}};
  if (!f.config.empty()) cfg.merge_json(harness::read_json_file(f.config));
  cfg.validate();
  return cfg;
}

int run_experiment_command(const ExperimentConfig& cfg) {
  auto rep = harness::run_experiment(cfg);
  json j;
  j["config"] = cfg.to_json();
  auto& trials = j["trials"] = json::array();
  for (const auto& o : rep.outcomes) trials.push_back(o.summary);
  j["failures"] = rep.failures;
  std::cout << j.dump(2) << '\n';
  for (const auto& f : rep.failures) std::cerr << "error: " << f << '\n';
  return rep.exit_code();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, sep);) out.push_back(cell);
  return out;
}

// (T, metric) pairs from aggregate.csv files written by the experiment commands
std::vector<harness::GrowthSample> read_aggregates(const std::vector<std::string>& paths) {
  std::map<std::uint64_t, harness::GrowthSample> by_T;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    const auto header = split(line, ',');
    auto col = [&](const std::string& name) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw InvalidSpec("'" + path + "': missing column " + name);
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t cT = col("T"), cm = col("metric");
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
      if (line.empty()) continue;
      const auto cells = split(line, ',');
      if (cells.size() != header.size()) throw InvalidSpec("'" + path + "' line " + std::to_string(lineno) + ": ragged row");
      const auto T = std::stoull(cells[cT]);
      by_T[T].T = T;
      by_T[T].values.push_back(std::stod(cells[cm]));
    }
  }
  std::vector<harness::GrowthSample> out;
  for (auto& [T, s] : by_T) out.push_back(std::move(s));
  return out;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidSpec("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online vector balancing and discrepancy experiments"};
  app.require_subcommand(1);
  // fractal uses --h for the tree height
  app.set_help_flag("--help", "Print this help message and exit");

  Flags f;
  std::vector<std::pair<std::string, CLI::App*>> experiments;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"balance", "Sign an i.i.d. stream from a distribution spec"},
           {"interval", "Online interval discrepancy on uniform points in [0,1]^d"},
           {"tusnady", "Online dyadic box discrepancy (Tusnady) on uniform points"},
           {"envy", "Two-player online allocation, cardinal or ordinal envy"},
           {"adversary", "Adaptive orthogonal adversary"},
           {"sphere", "Uniform unit-sphere stress test"}}) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, f);
    add_problem_flags(sub, f);
    experiments.emplace_back(name, sub);
  }

  // lowerbound
  std::uint64_t lb_n = 16, lb_steps = 0;
  auto* lowerbound = app.add_subcommand("lowerbound", "Uncorrelated lower-bound frequency experiment");
  lowerbound->add_option("--n", lb_n, "Hadamard order when no --spec is given");
  lowerbound->add_option("--spec", f.spec_file, "Finite-support spec (JSON file)");
  lowerbound->add_option("--trials", f.trials, "Trials")->default_val(200);
  lowerbound->add_option("--seed", f.seed, "First seed");
  lowerbound->add_option("--algorithm", f.algorithm, "cosh | random");
  lowerbound->add_option("--steps", lb_steps, "Steps per trial (default n)");

  // fractal
  std::vector<int> heights{8, 12, 16, 20, 24};
  double magnitude = 8.0;
  bool dump_labels = false;
  auto* fractal = app.add_subcommand("fractal", "Exact path sums on the fractal tree");
  fractal->add_option("--h", heights, "Tree height(s)")->delimiter(',');
  fractal->add_option("--magnitude", magnitude, "Label magnitude d");
  fractal->add_flag("--labels", dump_labels, "Include the nonzero label table (h <= 24)");

  // anticonc
  std::string family = "hadamard", var_class = "uncorrelated";
  std::size_t ac_n = 4, count = 100;
  std::vector<double> deltas{0.5, 0.1, 0.01};
  auto* anticonc = app.add_subcommand("anticonc", "Exact anti-concentration checks");
  anticonc->add_option("--family", family, "hadamard | counterexample | random")
      ->check(CLI::IsMember({"hadamard", "counterexample", "random"}));
  anticonc->add_option("--n", ac_n, "Number of variables");
  anticonc->add_option("--delta", deltas, "Counterexample parameter(s)")->delimiter(',');
  anticonc->add_option("--count", count, "Random instances");
  anticonc->add_option("--class", var_class, "uncorrelated | pairwise")->check(CLI::IsMember({"uncorrelated", "pairwise"}));
  anticonc->add_option("--seed", f.seed, "Seed for random instances");
  anticonc->add_option("--out", f.out, "CSV file (default stdout)");

  // fit
  std::vector<std::string> inputs;
  std::string command = "interval";
  auto* fit = app.add_subcommand("fit", "Least-squares growth exponent of the median metric against T");
  fit->add_option("--input", inputs, "aggregate.csv file(s); without them the experiment is run");
  fit->add_option("--command", command, "Experiment to run when no --input is given");
  add_common(fit, f);
  add_problem_flags(fit, f);

  // compare
  std::vector<std::string> algorithms{"cosh", "random"};
  auto* compare = app.add_subcommand("compare", "Paired maxima of several algorithms on shared streams");
  compare->add_option("--command", command, "Experiment to compare on");
  compare->add_option("--algorithms", algorithms, "Algorithms")->delimiter(',');
  add_common(compare, f);
  add_problem_flags(compare, f);

  // regress
  std::string table_path = "data/regression_constants.json";
  bool update = false;
  auto* regress = app.add_subcommand("regress", "Check (or --update) the frozen scaling constants");
  regress->add_option("--table", table_path, "Regression table");
  regress->add_flag("--update", update, "Write measured values into the table");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, sub] : experiments)
      if (sub->parsed()) return run_experiment_command(build_config(name, f));

    if (lowerbound->parsed()) {
      const auto spec = f.spec_file.empty() ? DistributionSpec::hadamard_rows(lb_n)
                                            : harness::spec_from_json(harness::read_json_file(f.spec_file));
      auto rep = adversary::lower_bound_experiment(spec, parse_algorithm(f.algorithm), f.trials, f.seed, lb_steps);
      std::cout << rep.to_json().dump(2) << '\n';
      return 0;
    }

    if (fractal->parsed()) {
      json out = json::array();
      for (int h : heights) {
        json j = adversary::fractal_ratio(h, magnitude).to_json();
        if (dump_labels && h <= 24) {
          auto& labels = j["labels"] = json::array();
          for (const auto& e : adversary::fractal_labels(h))
            labels.push_back({{"level", e.level}, {"index", e.index}, {"label", adversary::label_name(e.label)}});
        }
        out.push_back(std::move(j));
      }
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    if (anticonc->parsed()) {
      std::ostringstream csv;
      csv.precision(17);
      if (family == "counterexample") {
        csv << "delta,lhs,rhs,ratio,cross_moment\n";
        for (double delta : deltas) {
          auto r = anticonc::pairwise_counterexample(delta);
          csv << delta << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio << ',' << r.cross_moment << '\n';
        }
        write_or_print(f.out, csv.str());
        return 0;
      }
      const bool pairwise = var_class == "pairwise";
      std::vector<anticonc::AnticoncInstance> instances;
      if (family == "hadamard") {
        instances.push_back(anticonc::hadamard_instance(ac_n));
      } else {
        SeededRng rng(f.seed);
        for (std::size_t k = 0; k < count; ++k)
          instances.push_back(pairwise ? anticonc::random_pairwise(ac_n, rng) : anticonc::random_uncorrelated(ac_n, rng));
      }
      csv << "instance,class,lhs,rhs,holds\n";
      bool all = true;
      for (std::size_t k = 0; k < instances.size(); ++k) {
        auto v = pairwise ? anticonc::verify_pairwise(instances[k]) : anticonc::verify_uncorrelated(instances[k]);
        all = all && v.holds;
        csv << k << ',' << var_class << ',' << v.lhs << ',' << v.rhs << ',' << (v.holds ? "true" : "false") << '\n';
      }
      write_or_print(f.out, csv.str());
      return all ? 0 : 1;
    }

    if (fit->parsed()) {
      std::vector<harness::GrowthSample> samples;
      if (!inputs.empty()) {
        samples = read_aggregates(inputs);
      } else {
        auto rep = harness::run_experiment(build_config(command, f));
        for (const auto& e : rep.failures) std::cerr << "error: " << e << '\n';
        if (rep.exit_code()) return rep.exit_code();
        samples = harness::growth_samples(rep);
      }
      std::cout << harness::fit_growth(samples).to_json().dump(2) << '\n';
      return 0;
    }

    if (compare->parsed()) {
      auto table = harness::compare(build_config(command, f), algorithms);
      std::ostringstream csv;
      table.write_csv(csv);
      std::cout << csv.str();
      if (!f.out.empty()) {
        std::filesystem::create_directories(f.out);
        write_or_print(f.out + "/compare.csv", csv.str());
      }
      if (algorithms.size() >= 2)
        std::cerr << algorithms[0] << " <= " << algorithms[1] << " in " << table.fraction_at_most(0, 1) * 100
                  << "% of seeds\n";
      return 0;
    }

    if (regress->parsed()) {
      harness::RegressionTable table;
      if (!update) table = harness::RegressionTable::load(table_path);
      json report = json::array();
      bool ok = true;
      for (const auto& m : harness::regression_measurements()) {
        json row{{"name", m.name}, {"measured", m.value}};
        if (update) {
          table.entries[m.name] = {m.value, 0.2, m.description};
        } else {
          const bool within = table.within(m.name, m.value);
          ok = ok && within;
          row["frozen"] = table.entries.at(m.name).value;
          row["within"] = within;
        }
        report.push_back(row);
      }
      if (update) table.save(table_path);
      std::cout << report.dump(2) << '\n';
      return ok ? 0 : 1;
    }
  } catch (const obal::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
