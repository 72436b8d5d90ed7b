#pragma once

// Experiment orchestration: configs, a seed-ordered worker pool, per-trial
// pipelines, growth fits, paired comparisons and the frozen regression table.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adversary.hpp"
#include "core.hpp"
#include "problems.hpp"
#include "result.hpp"
#include "signer.hpp"
#include "spectral.hpp"

namespace obal::harness {

using json = nlohmann::ordered_json;

inline constexpr int kConfigFormatVersion = 1;
inline constexpr int kRegressionFormatVersion = 1;

// ---------------------------------------------------------------------------
// Worker pool.

/// BALANCER_WORKERS if set and positive, else the hardware thread count.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("BALANCER_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// f(i) for i in [0, count) across the pool; results in index order. The
/// exception of the lowest failing index, if any, is rethrown after all
/// workers finish.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, F&& f, std::size_t workers = 0) {
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(count, workers ? workers : worker_count());
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------
// Distribution presets and JSON.

/// Atoms +-(1,...,1) and +-e_1, each with probability 1/4. Strongly
/// correlated: every pair of coordinates has E[v(i) v(j)] = 1/2.
inline DistributionSpec correlated_spec(std::uint64_t n) {
  std::vector<Atom> atoms;
  for (int xi : {1, -1}) {
    SparseUpdate ones;
    ones.dim = n;
    for (std::uint64_t i = 0; i < n; ++i) ones.entries.push_back({i, double(xi)});
    atoms.push_back({ones, 0.25});
  }
  for (int xi : {1, -1}) atoms.push_back({SparseUpdate{{{0, double(xi)}}, n}, 0.25});
  return DistributionSpec::finite_support(n, std::move(atoms));
}

/// Hadamard rows written out as a finite-support table (2n atoms).
inline DistributionSpec uncorrelated_spec(std::uint64_t n) {
  return DistributionSpec::finite_support(n, DistributionSpec::hadamard_rows(n).atoms());
}

/// {"kind": ..., "dim": n, ...}. Finite support takes
/// "atoms": [{"p": 0.5, "entries": [[coord, value], ...]}, ...]; a file stream
/// takes "path"; presets "correlated" and "uncorrelated" take only "dim".
inline DistributionSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw InvalidSpec("spec must be an object");
  const std::string kind = j.value("kind", "");
  const std::uint64_t dim = j.value("dim", std::uint64_t{0});
  if (kind == "finite-support") {
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      SparseUpdate u;
      u.dim = dim;
      for (const auto& e : a.at("entries")) u.entries.push_back({e.at(0).get<CoordId>(), e.at(1).get<double>()});
      atoms.push_back({std::move(u), a.at("p").get<double>()});
    }
    auto spec = DistributionSpec::finite_support(dim, std::move(atoms));
    if (j.contains("sparsity")) {
      spec.sparsity = j["sparsity"].get<std::uint64_t>();
      spec.validate();
    }
    return spec;
  }
  if (kind == "product-uniform-cube") return DistributionSpec::product_uniform_cube(dim);
  if (kind == "unit-sphere") return DistributionSpec::unit_sphere(dim);
  if (kind == "hadamard-rows") return DistributionSpec::hadamard_rows(dim);
  if (kind == "file-stream") return DistributionSpec::file_stream(j.at("path").get<std::string>());
  if (kind == "correlated") return correlated_spec(dim);
  if (kind == "uncorrelated") return uncorrelated_spec(dim);
  throw InvalidSpec("unknown spec kind '" + kind + "'");
}

inline json spec_to_json(const DistributionSpec& spec) {
  json j;
  j["kind"] = spec.kind_name();
  j["dim"] = spec.dim;
  j["sparsity"] = spec.sparsity;
  if (auto* fs = std::get_if<FiniteSupport>(&spec.kind)) {
    auto& atoms = j["atoms"] = json::array();
    for (const auto& a : fs->atoms) {
      json entries = json::array();
      for (const auto& e : a.update.entries) entries.push_back({e.coord, e.value});
      atoms.push_back({{"p", a.probability}, {"entries", entries}});
    }
  } else if (auto* f = std::get_if<FileStreamSource>(&spec.kind)) {
    j["path"] = f->path;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Experiment config.

struct ExperimentConfig {
  std::string command = "interval";
  std::optional<json> spec;          // balance
  std::uint64_t dim = 1;             // d for interval/tusnady, n for sphere/adversary
  std::vector<std::uint64_t> T_grid{1024};
  std::uint64_t trials = 1;
  std::uint64_t seed_base = 0;
  std::string algorithm = "cosh";
  std::uint64_t probe_count = 0;
  std::uint64_t stride = 1;
  std::optional<double> lambda;
  bool general = false;              // balance: spectral pipeline
  std::string covariance = "exact";  // exact | sampled
  std::string envy_mode = "cardinal";
  std::string valuation_model = "correlated";
  std::string output_dir;

  void validate() const {
    static const std::vector<std::string> commands{"balance", "interval", "tusnady", "envy", "sphere", "adversary"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end())
      throw InvalidSpec("config: command '" + command + "' has no trial pipeline");
    if (trials < 1) throw InvalidSpec("config: trials must be >= 1");
    if (T_grid.empty()) throw InvalidSpec("config: T grid is empty");
    for (std::size_t i = 0; i < T_grid.size(); ++i) {
      if (T_grid[i] != 0 && !is_power_of_two(T_grid[i])) throw InvalidSpec("config: T grid entries must be powers of two");
      if (i > 0 && T_grid[i] <= T_grid[i - 1]) throw InvalidSpec("config: T grid must be strictly ascending");
    }
    if (stride < 1) throw InvalidSpec("config: stride must be >= 1");
    if (command == "balance" && !spec) throw InvalidSpec("config: balance needs a spec");
    if (covariance != "exact" && covariance != "sampled") throw InvalidSpec("config: covariance must be exact|sampled");
    if (envy_mode != "cardinal" && envy_mode != "ordinal") throw InvalidSpec("config: envy mode must be cardinal|ordinal");
    parse_algorithm(algorithm);
    problems::parse_valuation_model(valuation_model);
  }

  json to_json() const {
    json j;
    j["format_version"] = kConfigFormatVersion;
    j["command"] = command;
    if (spec) j["spec"] = *spec;
    j["dim"] = dim;
    j["T_grid"] = T_grid;
    j["trials"] = trials;
    j["seed_base"] = seed_base;
    j["algorithm"] = algorithm;
    j["probe_count"] = probe_count;
    j["stride"] = stride;
    if (lambda) j["lambda"] = *lambda;
    j["general"] = general;
    j["covariance"] = covariance;
    j["envy_mode"] = envy_mode;
    j["valuation_model"] = valuation_model;
    j["output_dir"] = output_dir;
    return j;
  }

  /// Keys absent from `j` keep their current values.
  void merge_json(const json& j) {
    if (!j.is_object()) throw InvalidSpec("config must be a JSON object");
    const int version = j.value("format_version", 0);
    if (version != kConfigFormatVersion)
      throw InvalidSpec("config: unsupported format_version " + std::to_string(version));
    try {
      if (j.contains("command")) command = j["command"].get<std::string>();
      if (j.contains("spec")) spec = j["spec"];
      if (j.contains("dim")) dim = j["dim"].get<std::uint64_t>();
      if (j.contains("T_grid")) T_grid = j["T_grid"].get<std::vector<std::uint64_t>>();
      if (j.contains("trials")) trials = j["trials"].get<std::uint64_t>();
      if (j.contains("seed_base")) seed_base = j["seed_base"].get<std::uint64_t>();
      if (j.contains("algorithm")) algorithm = j["algorithm"].get<std::string>();
      if (j.contains("probe_count")) probe_count = j["probe_count"].get<std::uint64_t>();
      if (j.contains("stride")) stride = j["stride"].get<std::uint64_t>();
      if (j.contains("lambda")) lambda = j["lambda"].get<double>();
      if (j.contains("general")) general = j["general"].get<bool>();
      if (j.contains("covariance")) covariance = j["covariance"].get<std::string>();
      if (j.contains("envy_mode")) envy_mode = j["envy_mode"].get<std::string>();
      if (j.contains("valuation_model")) valuation_model = j["valuation_model"].get<std::string>();
      if (j.contains("output_dir")) output_dir = j["output_dir"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw InvalidSpec(std::string("config: ") + e.what());
    }
  }

  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.merge_json(j);
    cfg.validate();
    return cfg;
  }
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Trials.

struct TrialOutcome {
  std::string command;
  std::uint64_t T = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  double metric = 0.0;  // the quantity fitted and compared across algorithms
  std::uint64_t probes_checked = 0;
  json summary;
  RunResult trace;
};

namespace detail {

inline RunResult trace_from(const std::vector<double>& values, std::uint64_t stride, const std::string& alg,
                            std::uint64_t seed, const std::vector<std::uint64_t>* times = nullptr) {
  RunResult r;
  r.algorithm = alg;
  r.seed = seed;
  r.stride = stride;
  for (std::size_t i = 0; i < values.size(); ++i) r.record(times ? (*times)[i] : i + 1, values[i], 0.0);
  r.finish();
  return r;
}

inline std::vector<problems::IntervalProbe> interval_probes(std::uint64_t count, std::size_t d, int L, std::uint64_t T,
                                                            SeededRng rng) {
  std::vector<problems::IntervalProbe> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    problems::IntervalProbe p;
    p.interval.level = static_cast<int>(rng.below(L + 1));
    p.interval.index = rng.below(std::uint64_t{1} << p.interval.level);
    p.axis = rng.below(d);
    p.t = rng.below(T + 1);
    out.push_back(p);
  }
  return out;
}

inline std::vector<problems::BoxProbe> box_probes(std::uint64_t count, std::size_t d, int L, std::uint64_t T,
                                                  SeededRng rng) {
  std::vector<problems::BoxProbe> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    problems::BoxProbe p;
    for (std::size_t i = 0; i < d; ++i) {
      haar::DyadicInterval I;
      I.level = static_cast<int>(rng.below(L + 1));
      I.index = rng.below(std::uint64_t{1} << I.level);
      p.box.axes.push_back(I);
    }
    p.t = rng.below(T + 1);
    out.push_back(p);
  }
  return out;
}

}  // namespace detail

/// One trial of `cfg.command` at horizon T with the given seed and algorithm.
inline TrialOutcome run_trial(const ExperimentConfig& cfg, std::uint64_t T, std::uint64_t seed, Algorithm alg) {
  const SeededRng rng(seed);
  TrialOutcome out;
  out.command = cfg.command;
  out.T = T;
  out.seed = seed;
  out.algorithm = algorithm_name(alg);
  json s;
  s["schema_version"] = kOutputSchemaVersion;
  s["command"] = cfg.command;
  s["T"] = T;
  s["seed"] = seed;
  s["algorithm"] = out.algorithm;

  if (cfg.command == "balance") {
    const auto spec = spec_from_json(*cfg.spec);
    s["spec"] = spec.kind_name();
    if (cfg.general) {
      spectral::GeneralOptions opts;
      opts.algorithm = alg;
      opts.stride = cfg.stride;
      opts.covariance = cfg.covariance == "exact" ? spectral::CovarianceMode::exact() : spectral::CovarianceMode::sampled();
      auto run = spectral::balance_general(spec, T, rng, opts);
      out.trace = std::move(run.original);
      out.metric = out.trace.max_linf;
      s["max_linf"] = out.metric;
      s["eigen_max_linf"] = run.eigen.max_linf;
      s["argmax_t"] = out.trace.argmax_t;
      s["max_phi"] = out.trace.max_phi;
    } else {
      SignerConfig sc = SignerConfig::for_sparsity(spec.dim, spec.sparsity);
      if (cfg.lambda) sc.lambda = *cfg.lambda;
      sc.validate();
      Sampler sampler(spec);
      out.trace = run_stream(sampler, T, sc, rng, alg, cfg.stride);
      out.metric = out.trace.max_linf;
      s["max_linf"] = out.metric;
      s["argmax_t"] = out.trace.argmax_t;
      s["max_phi"] = out.trace.max_phi;
    }
  } else if (cfg.command == "interval") {
    const auto pts = problems::sample_points(cfg.dim, T, rng.fork(stream_tag::kInput));
    problems::IntervalOptions opts;
    opts.algorithm = alg;
    opts.lambda = cfg.lambda;
    opts.stride = cfg.stride;
    opts.probes = detail::interval_probes(cfg.probe_count, cfg.dim, problems::tree_depth(T), T, rng.fork(stream_tag::kProbe));
    auto run = problems::interval_signer(pts, rng, opts);
    out.probes_checked = run.probe_outcomes.size();
    out.trace = std::move(run.dyadic);
    out.metric = out.trace.max_linf;
    s["d"] = cfg.dim;
    s["max_scale"] = run.max_scale;
    s["sparsity"] = run.sparsity;
    s["max_dyadic_discrepancy"] = out.metric;
    s["argmax_t"] = out.trace.argmax_t;
    s["max_haar_coordinate"] = run.haar.max_linf;
    s["max_phi"] = run.haar.max_phi;
    s["probe_agreements"] = out.probes_checked;
  } else if (cfg.command == "tusnady") {
    const auto pts = problems::sample_points(cfg.dim, T, rng.fork(stream_tag::kInput));
    problems::TusnadyOptions opts;
    opts.algorithm = alg;
    opts.lambda = cfg.lambda;
    opts.stride = cfg.stride;
    opts.probes = detail::box_probes(cfg.probe_count, cfg.dim, problems::tree_depth(T), T, rng.fork(stream_tag::kProbe));
    auto run = problems::tusnady_signer(pts, rng, opts);
    out.probes_checked = run.probe_outcomes.size();
    out.trace = std::move(run.dyadic);
    out.metric = out.trace.max_linf;
    s["d"] = cfg.dim;
    s["max_scale"] = run.max_scale;
    s["sparsity"] = run.sparsity;
    s["touched"] = run.touched;
    s["max_box_discrepancy"] = out.metric;
    s["argmax_t"] = out.trace.argmax_t;
    s["max_haar_coordinate"] = run.haar.max_linf;
    s["max_phi"] = run.haar.max_phi;
    s["probe_agreements"] = out.probes_checked;
  } else if (cfg.command == "envy") {
    const auto model = problems::parse_valuation_model(cfg.valuation_model);
    const auto values = problems::sample_valuations(model, T, rng.fork(stream_tag::kInput));
    s["mode"] = cfg.envy_mode;
    s["valuation_model"] = cfg.valuation_model;
    if (cfg.envy_mode == "cardinal") {
      spectral::Matrix P = problems::valuation_covariance(model);
      if (cfg.covariance == "sampled") {
        const auto draws = problems::sample_valuations(model, spectral::default_covariance_samples(2),
                                                       rng.fork(stream_tag::kCovariance));
        P = spectral::Matrix(2, 2);
        for (const auto& v : draws) {
          const double w[2] = {v.u1, -v.u2};
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) P(a, b) += w[a] * w[b] / double(draws.size());
        }
      }
      auto run = problems::allocate_cardinal(values, P, rng, alg);
      out.trace = detail::trace_from(run.envy_trace, cfg.stride, out.algorithm, seed);
      out.metric = run.max_envy;
      s["max_envy"] = run.max_envy;
      s["argmax_t"] = run.argmax_t;
    } else {
      auto run = problems::allocate_ordinal(values, rng, alg);
      std::vector<double> envy(run.ordinal_envy.begin(), run.ordinal_envy.end());
      out.trace = detail::trace_from(envy, 1, out.algorithm, seed, &run.check_times);
      out.metric = out.trace.max_linf;
      s["max_ordinal_envy"] = out.metric;
      s["final_ordinal_envy"] = run.final_ordinal_envy;
      s["max_interval_discrepancy"] =
          run.interval_max.empty() ? 0 : *std::max_element(run.interval_max.begin(), run.interval_max.end());
    }
  } else if (cfg.command == "sphere") {
    auto rep = adversary::sphere_stress(cfg.dim, {T}, 1, alg, seed);
    out.metric = rep.grid[0].median;
    const std::vector<std::uint64_t> at{T};
    out.trace = detail::trace_from({out.metric}, 1, out.algorithm, seed, &at);
    s["n"] = cfg.dim;
    s["max_l2"] = out.metric;
    s["reference"] = rep.grid[0].reference;
    s["max_identity_error"] = rep.max_identity_error;
  } else if (cfg.command == "adversary") {
    auto run = adversary::run_orthogonal_adversary(cfg.dim, T, alg, rng);
    if (run.violations) throw InvariantViolation("adversary: |d_t|_2^2 < (n-1) t at " + std::to_string(run.violations) + " steps");
    std::vector<double> norms;
    for (double x : run.sq_norms) norms.push_back(std::sqrt(x));
    out.trace = detail::trace_from(norms, cfg.stride, out.algorithm, seed);
    out.metric = T ? std::sqrt(run.sq_norms.back()) : 0.0;
    s["n"] = cfg.dim;
    s["final_l2"] = out.metric;
    s["min_slack"] = run.min_slack;
    s["max_relative_inner_product"] = run.max_inner;
    s["min_v_sq"] = run.min_v_sq;
  }
  out.summary = std::move(s);
  return out;
}

struct ExperimentReport {
  std::vector<TrialOutcome> outcomes;  // ordered by (T, seed)
  std::vector<std::string> failures;
  int exit_code() const { return failures.empty() ? 0 : 1; }
};

inline std::string trial_stem(const TrialOutcome& o) {
  return o.command + "_T" + std::to_string(o.T) + "_seed" + std::to_string(o.seed) + "_" + o.algorithm;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<TrialOutcome>& outcomes) {
  out << "command,T,seed,algorithm,metric,steps,probes\n";
  const auto old = out.precision(17);
  for (const auto& o : outcomes)
    out << o.command << ',' << o.T << ',' << o.seed << ',' << o.algorithm << ',' << o.metric << ',' << o.trace.steps
        << ',' << o.probes_checked << '\n';
  out.precision(old);
}

/// Every (T, seed) trial of cfg, fanned out over the pool and merged in
/// (T, seed) order. Writes per-trial JSON and trace CSV plus aggregate.csv
/// when output_dir is set. Inner-module errors are collected with their
/// (command, T, seed) provenance and make the exit code nonzero.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Algorithm alg = parse_algorithm(cfg.algorithm);
  struct Job {
    std::uint64_t T, seed;
  };
  std::vector<Job> jobs;
  for (auto T : cfg.T_grid)
    for (std::uint64_t k = 0; k < cfg.trials; ++k) jobs.push_back({T, cfg.seed_base + k});
  struct Slot {
    std::optional<TrialOutcome> outcome;
    std::string failure;
  };
  auto slots = parallel_map<Slot>(jobs.size(), [&](std::size_t i) {
    Slot slot;
    try {
      slot.outcome = run_trial(cfg, jobs[i].T, jobs[i].seed, alg);
    } catch (const Error& e) {
      slot.failure = cfg.command + " T=" + std::to_string(jobs[i].T) + " seed=" + std::to_string(jobs[i].seed) + ": " + e.what();
    }
    return slot;
  });
  ExperimentReport rep;
  for (auto& s : slots) {
    if (s.outcome) rep.outcomes.push_back(std::move(*s.outcome));
    else rep.failures.push_back(std::move(s.failure));
  }
  if (!cfg.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    for (const auto& o : rep.outcomes) {
      std::ofstream js(fs::path(cfg.output_dir) / (trial_stem(o) + ".json"));
      js << o.summary.dump(2) << '\n';
      std::ofstream csv(fs::path(cfg.output_dir) / (trial_stem(o) + ".csv"));
      o.trace.write_trace_csv(csv);
    }
    std::ofstream agg(fs::path(cfg.output_dir) / "aggregate.csv");
    write_aggregate_csv(agg, rep.outcomes);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Growth fits.

struct GrowthSample {
  std::uint64_t T = 0;
  std::vector<double> values;  // one per seed
};

struct GrowthFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the log-log residuals
  std::vector<std::pair<std::uint64_t, double>> medians;

  json to_json() const {
    json j;
    j["schema_version"] = kOutputSchemaVersion;
    j["exponent"] = exponent;
    j["intercept"] = intercept;
    j["residual"] = residual;
    auto& m = j["medians"] = json::array();
    for (const auto& [T, v] : medians) m.push_back({{"T", T}, {"median", v}});
    return j;
  }
};

/// Least-squares slope of log(median over seeds) against log T.
inline GrowthFit fit_growth(const std::vector<GrowthSample>& samples) {
  std::map<std::uint64_t, std::vector<double>> by_T;
  for (const auto& s : samples) by_T[s.T].insert(by_T[s.T].end(), s.values.begin(), s.values.end());
  if (by_T.size() < 4) throw DomainError("fit_growth: need at least 4 distinct T values");
  GrowthFit fit;
  std::vector<double> xs, ys;
  for (const auto& [T, vals] : by_T) {
    if (T < 2) throw DomainError("fit_growth: T must be >= 2");
    if (vals.empty()) throw DomainError("fit_growth: no values at T=" + std::to_string(T));
    const double med = adversary::median_of(vals);
    if (!(med > 0.0)) throw DomainError("fit_growth: median must be positive at T=" + std::to_string(T));
    fit.medians.emplace_back(T, med);
    xs.push_back(std::log(double(T)));
    ys.push_back(std::log(med));
  }
  const double n = double(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxx += (xs[i] - mx) * (xs[i] - mx), sxy += (xs[i] - mx) * (ys[i] - my);
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.exponent * xs[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

/// Metric per (T, seed) from an experiment report, grouped for fit_growth.
inline std::vector<GrowthSample> growth_samples(const ExperimentReport& rep) {
  std::map<std::uint64_t, GrowthSample> by_T;
  for (const auto& o : rep.outcomes) {
    by_T[o.T].T = o.T;
    by_T[o.T].values.push_back(o.metric);
  }
  std::vector<GrowthSample> out;
  for (auto& [T, s] : by_T) out.push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Paired comparisons.

struct ComparisonRow {
  std::uint64_t seed = 0;
  std::vector<double> values;  // one per algorithm
};

struct ComparisonTable {
  std::uint64_t T = 0;
  std::vector<std::string> algorithms;
  std::vector<ComparisonRow> rows;

  /// Fraction of seeds where column a <= column b.
  double fraction_at_most(std::size_t a, std::size_t b) const {
    if (rows.empty()) return 0.0;
    std::size_t wins = 0;
    for (const auto& r : rows) wins += r.values[a] <= r.values[b];
    return double(wins) / double(rows.size());
  }

  void write_csv(std::ostream& out) const {
    out << "seed";
    for (const auto& a : algorithms) out << ',' << a;
    out << '\n';
    const auto old = out.precision(17);
    for (const auto& r : rows) {
      out << r.seed;
      for (double v : r.values) out << ',' << v;
      out << '\n';
    }
    out.precision(old);
  }
};

/// Runs every algorithm on the same seeds at the first T of the grid. Each
/// seed fixes the input stream independently of the signs, so columns are
/// paired. The adaptive adversary builds inputs from past signs, so pairing
/// is refused there.
inline ComparisonTable compare(const ExperimentConfig& cfg, const std::vector<std::string>& algorithms) {
  cfg.validate();
  if (cfg.command == "adversary")
    throw UnsupportedMode("compare: the adaptive adversary derives inputs from the signs; streams cannot be paired");
  if (algorithms.empty()) throw InvalidSpec("compare: no algorithms given");
  std::vector<Algorithm> algs;
  for (const auto& a : algorithms) algs.push_back(parse_algorithm(a));
  ComparisonTable table;
  table.T = cfg.T_grid.front();
  table.algorithms = algorithms;
  const std::size_t cols = algs.size();
  auto cells = parallel_map<double>(cfg.trials * cols, [&](std::size_t i) {
    return run_trial(cfg, table.T, cfg.seed_base + i / cols, algs[i % cols]).metric;
  });
  for (std::uint64_t k = 0; k < cfg.trials; ++k) {
    ComparisonRow row{cfg.seed_base + k, {}};
    for (std::size_t c = 0; c < cols; ++c) row.values.push_back(cells[k * cols + c]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Frozen regression constants.

struct RegressionEntry {
  double value = 0.0;
  double slack = 0.2;
  std::string description;
};

struct RegressionTable {
  std::map<std::string, RegressionEntry> entries;

  static RegressionTable load(const std::string& path) {
    const json j = read_json_file(path);
    if (j.value("format_version", 0) != kRegressionFormatVersion)
      throw InvalidSpec("regression table: unsupported format_version");
    RegressionTable t;
    for (const auto& [name, e] : j.at("entries").items())
      t.entries[name] = {e.at("value").get<double>(), e.value("slack", 0.2), e.value("description", "")};
    return t;
  }

  void save(const std::string& path) const {
    json j;
    j["format_version"] = kRegressionFormatVersion;
    auto& es = j["entries"] = json::object();
    for (const auto& [name, e] : entries) es[name] = {{"value", e.value}, {"slack", e.slack}, {"description", e.description}};
    std::ofstream out(path);
    if (!out) throw InvalidSpec("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
  }

  /// True when |measured - frozen| <= slack * frozen.
  bool within(const std::string& name, double measured) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw InvalidSpec("regression table has no entry '" + name + "'");
    return std::abs(measured - it->second.value) <= it->second.slack * std::abs(it->second.value);
  }
};

struct RegressionMeasurement {
  std::string name;
  std::string description;
  double value = 0.0;
};

namespace detail {
inline double median_metric(const ExperimentConfig& cfg) {
  auto rep = run_experiment(cfg);
  if (!rep.failures.empty()) throw InvariantViolation(rep.failures.front());
  std::vector<double> v;
  for (const auto& o : rep.outcomes) v.push_back(o.metric);
  return adversary::median_of(v);
}
}  // namespace detail

/// The frozen scaling measurements: medians over fixed seeds.
inline std::vector<RegressionMeasurement> regression_measurements() {
  std::vector<RegressionMeasurement> out;
  {
    ExperimentConfig c;
    c.command = "interval";
    c.dim = 1;
    c.T_grid = {1u << 14};
    c.trials = 20;
    out.push_back({"interval_d1_T16384", "median over seeds 0-19 of max dyadic interval discrepancy, d=1, T=2^14",
                   detail::median_metric(c)});
  }
  {
    ExperimentConfig c;
    c.command = "tusnady";
    c.dim = 2;
    c.T_grid = {1u << 10};
    c.trials = 10;
    out.push_back({"tusnady_d2_T1024", "median over seeds 0-9 of max dyadic box discrepancy, d=2, T=2^10",
                   detail::median_metric(c)});
  }
  {
    ExperimentConfig c;
    c.command = "balance";
    c.general = true;
    c.spec = json{{"kind", "correlated"}, {"dim", 8}};
    c.T_grid = {1u << 12};
    c.trials = 10;
    out.push_back({"general_n8_correlated_T4096",
                   "median over seeds 0-9 of max |d_t|_inf (input basis), spectral balancing, n=8 correlated spec, T=2^12",
                   detail::median_metric(c)});
  }
  {
    ExperimentConfig c;
    c.command = "envy";
    c.envy_mode = "cardinal";
    c.valuation_model = "correlated";
    c.T_grid = {1u << 12};
    c.trials = 10;
    out.push_back({"cardinal_envy_T4096", "median over seeds 0-9 of max cardinal envy, correlated valuations, T=2^12",
                   detail::median_metric(c)});
  }
  return out;
}

}  // namespace obal::harness
