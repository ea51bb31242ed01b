// mq: command-line driver for the MultiQueue analytics, simulators, replay,
// verification suites and concurrent benchmark.
//
// Exit codes: 0 success, 1 verification/conservation failure or aborted
// experiment, 2 divergent choice distribution, 64 usage error.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mq/mq.hpp"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parsing helpers.

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_real(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw UsageError(std::string(what) + ": not a number: '" + t + "'");
  }
  return value;
}

/// Non-negative integer count; scientific notation such as 1e6 is accepted.
std::uint64_t parse_count(std::string_view text, std::string_view what) {
  const double v = parse_real(text, what);
  if (!std::isfinite(v) || v < 0.0 || v != std::floor(v) || v > 9007199254740992.0) {
    throw UsageError(std::string(what) + ": expected a non-negative integer, got '" +
                     trim(text) + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<std::uint64_t> parse_counts(std::string_view text, std::string_view what) {
  std::vector<std::uint64_t> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_count(part, what));
  return out;
}

std::vector<double> parse_reals(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_real(part, what));
  return out;
}

// ---------------------------------------------------------------------------
// Output.

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string num(std::uint64_t x) { return std::to_string(x); }

/// Destination for one artifact: a file if a path was given, else stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw UsageError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& out() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const Json& config, std::vector<std::string> header)
      : sink_(path) {
    sink_.out() << "# mq " << mq::kVersion << " config=" << config.dump() << '\n';
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    auto& os = sink_.out();
    for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
    os << '\n';
  }

 private:
  Sink sink_;
};

void write_json(const std::string& path, const Json& doc) {
  Sink sink(path);
  sink.out() << doc.dump(2) << '\n';
}

Json gof_json(const mq::GofReport& g) {
  Json j;
  j["test"] = g.test;
  j["statistic"] = g.statistic;
  j["p_value"] = g.p_value;
  j["distance"] = g.distance;
  j["sample_size"] = g.sample_size;
  j["bins"] = g.bins;
  return j;
}

// ---------------------------------------------------------------------------
// Shared options.

struct Common {
  std::string seed_text;
  std::string out;
};

/// Every option of a subcommand, as given or defaulted, plus the resolved
/// seed and the code version.
Json config_json(const CLI::App& app, std::uint64_t seed) {
  Json j;
  j["version"] = mq::kVersion;
  j["command"] = app.get_parent() && app.get_parent()->get_parent()
                     ? app.get_parent()->get_name() + " " + app.get_name()
                     : app.get_name();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "seed") continue;
    const auto& results = opt->results();
    if (opt->get_expected_min() == 0) {
      j[name] = opt->count() > 0;
    } else if (!results.empty()) {
      j[name] = results.size() == 1 ? Json(results.front()) : Json(results);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  j["seed"] = seed;
  return j;
}

std::uint64_t resolve_seed(const std::string& text) {
  std::string t = text;
  if (t.empty()) {
    const char* env = std::getenv("MQ_SEED");
    t = env ? env : "1";
  }
  try {
    return mq::parse_seed(t);
  } catch (const mq::ParameterError& e) {
    throw UsageError(std::string("seed: ") + e.what());
  }
}

struct ChoiceArgs {
  std::string c;
  std::string sigma;
  std::string n;
};

void add_choice_options(CLI::App* app, ChoiceArgs& args, bool require_n = true) {
  auto* c = app->add_option("--c", args.c, "queues compared per deletion (real > 1)");
  auto* s = app->add_option("--sigma", args.sigma,
                            "choice distribution: 'uniform', 'first', or comma-separated weights");
  c->excludes(s);
  auto* n = app->add_option("--n", args.n, "number of queues");
  if (require_n) n->required();
}

std::size_t parse_n(const std::string& text) {
  const auto n = parse_count(text, "--n");
  if (n == 0) throw UsageError("--n must be >= 1");
  return static_cast<std::size_t>(n);
}

/// Builds the choice distribution; defaults to best-of-2. A c <= 1 is a
/// divergence, not a usage error.
mq::ChoiceDistribution make_sigma(const ChoiceArgs& args) {
  if (!args.sigma.empty()) {
    if (args.sigma == "uniform" || args.sigma == "first") {
      if (args.n.empty()) throw UsageError("--sigma " + args.sigma + " needs --n");
      const auto n = parse_n(args.n);
      return args.sigma == "uniform" ? mq::ChoiceDistribution::uniform(n)
                                     : mq::ChoiceDistribution::first_only(n);
    }
    const auto weights = parse_reals(args.sigma, "--sigma");
    if (!args.n.empty() && parse_n(args.n) != weights.size()) {
      throw UsageError("--sigma has " + std::to_string(weights.size()) +
                       " weights but --n is " + args.n);
    }
    try {
      return mq::ChoiceDistribution::from_weights(weights);
    } catch (const mq::ParameterError& e) {
      throw UsageError(e.what());
    }
  }
  const double c = args.c.empty() ? 2.0 : parse_real(args.c, "--c");
  if (args.n.empty()) throw UsageError("--n is required");
  const auto n = parse_n(args.n);
  if (!std::isfinite(c)) throw UsageError("--c must be finite");
  if (!(c > 1.0)) {
    throw mq::DivergenceError(1, "c = " + num(c) +
                                     " <= 1: a deletion never compares two queues and "
                                     "the rank error diverges");
  }
  return mq::best_of_c(mq::CParameter(c), n);
}

std::optional<mq::CParameter> best_of_param(const ChoiceArgs& args) {
  if (!args.sigma.empty()) return std::nullopt;
  return mq::CParameter(args.c.empty() ? 2.0 : parse_real(args.c, "--c"));
}

mq::InitKind parse_init(const std::string& text) {
  if (text == "zeros") return mq::InitKind::zeros;
  if (text == "stationary") return mq::InitKind::stationary;
  throw UsageError("--init must be 'zeros' or 'stationary'");
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  ChoiceArgs choice;
  std::string format = "json";
  bool sweep = false;
  std::string sweep_from = "1.1", sweep_to = "8", sweep_step = "0.1";
};

int cmd_analyze(const CLI::App& app, const AnalyzeArgs& a, const Common& common) {
  const auto seed = resolve_seed(common.seed_text);
  const Json config = config_json(app, seed);
  if (a.sweep) {
    const auto rows = mq::c_sweep(parse_real(a.sweep_from, "--sweep-from"),
                                  parse_real(a.sweep_to, "--sweep-to"),
                                  parse_real(a.sweep_step, "--sweep-step"));
    if (a.format == "csv") {
      CsvWriter csv(common.out, config, {"c", "integral_f_c", "asymptote"});
      for (const auto& r : rows) csv.row({num(r.c), num(r.integral), num(r.asymptote)});
    } else {
      Json doc;
      doc["config"] = config;
      Json table = Json::array();
      for (const auto& r : rows) {
        table.push_back({{"c", r.c}, {"integral_f_c", r.integral}, {"asymptote", r.asymptote}});
      }
      doc["c_sweep"] = table;
      write_json(common.out, doc);
    }
    return kExitOk;
  }

  const auto sigma = make_sigma(a.choice);
  const auto params = mq::stationary_params(sigma);  // throws on divergence
  const auto ranks = mq::expected_ranks(sigma);
  const std::size_t n = sigma.n();

  if (a.format == "csv") {
    CsvWriter csv(common.out, config, {"i", "sigma_upto", "p_i", "lambda_i", "expected_rank"});
    for (std::size_t i = 1; i <= n; ++i) {
      const bool gap = i < n;
      csv.row({num(i), num(sigma.sigma_upto(i)), gap ? num(params.p[i - 1]) : "",
               gap ? num(params.lambda[i - 1]) : "", num(ranks[i - 1])});
    }
    return kExitOk;
  }

  const auto c = best_of_param(a.choice);
  const auto summary = c ? mq::summarize(*c, n) : mq::summarize(sigma);
  Json doc;
  doc["config"] = config;
  Json s;
  s["n"] = summary.n;
  s["scheme"] = summary.scheme;
  s["c"] = optional_json(summary.c);
  s["expected_rank_error"] = summary.exact_expectation;
  s["closed_form"] = optional_json(summary.closed_form);
  s["lower_bound"] = optional_json(summary.lower_bound);
  s["upper_bound"] = optional_json(summary.upper_bound);
  s["integral_f_c"] = optional_json(summary.integral_value);
  doc["summary"] = s;
  doc["stationary"] = {{"p", params.p}, {"lambda", params.lambda}};
  doc["sigma_upto"] = std::vector<double>(sigma.prefix().begin() + 1, sigma.prefix().end());
  doc["expected_ranks"] = ranks;
  doc["expected_initial_ranks"] = mq::expected_initial_ranks(n);
  if (c && c->value() == 2.0 && n >= 2) {
    const auto q = mq::concentration_quantities(n);
    doc["concentration"] = {{"mu", q.mu}, {"p_star", q.p_star}, {"min_p", q.min_p}};
  } else {
    doc["concentration"] = nullptr;
  }
  write_json(common.out, doc);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate chain

struct ChainArgs {
  ChoiceArgs choice;
  std::string steps = "1e6";
  std::string burnin;
  std::string thin = "1";
  std::string trials = "1";
  std::string init = "zeros";
  bool fast = false;
  std::string checkpoints;
  std::string hist_out;
  std::string summary_out;
};

int cmd_chain(const CLI::App& app, const ChainArgs& a, const Common& common) {
  const auto seed = resolve_seed(common.seed_text);
  const Json config = config_json(app, seed);
  const auto sigma = make_sigma(a.choice);
  mq::require_star(sigma);
  const std::size_t n = sigma.n();
  const auto init = parse_init(a.init);
  mq::RunOptions ro;
  ro.steps = parse_count(a.steps, "--steps");
  ro.burnin = a.burnin.empty() ? mq::default_burnin(n) : parse_count(a.burnin, "--burnin");
  ro.thin = parse_count(a.thin, "--thin");
  ro.fast = a.fast;
  ro.checkpoints = parse_counts(a.checkpoints, "--checkpoints");
  if (ro.thin == 0) throw UsageError("--thin must be >= 1");
  const auto trials = parse_count(a.trials, "--trials");
  if (trials == 0) throw UsageError("--trials must be >= 1");
  if (ro.steps == 0) {
    ro.burnin = 0;
    ro.checkpoints.clear();
  } else if (a.checkpoints.empty()) {
    ro.checkpoints = {0, ro.burnin + ro.steps};
  }

  const mq::RandomSource root(seed);
  const auto reports =
      ro.steps == 0 ? std::vector<mq::RunReport>{}
                    : mq::parallel_trials(trials, root, [&](std::size_t, mq::RandomSource& r) {
                        return mq::run(mq::initial_state(init, sigma, r), sigma, ro, r);
                      });

  const auto expected = mq::expected_ranks(sigma);
  const auto initial = mq::expected_initial_ranks(n);
  CsvWriter csv(common.out, config,
                {"step", "i", "observed_rank_i", "expected_rank_i", "expected_initial_rank_i"});
  if (!reports.empty()) {
    const auto& first = reports.front().checkpoints;
    for (std::size_t k = 0; k < first.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        long double total = 0.0L;
        for (const auto& r : reports) total += r.checkpoints[k].ranks[i];
        csv.row({num(first[k].step), num(i + 1),
                 num(static_cast<double>(total / reports.size())), num(expected[i]),
                 num(initial[i])});
      }
    }
  }

  if (!a.hist_out.empty()) {
    CsvWriter hist(a.hist_out, config, {"coordinate", "value", "count"});
    std::vector<mq::Histogram> gaps(n - 1);
    mq::Histogram errors;
    auto merge = [](mq::Histogram& into, const mq::Histogram& from) {
      if (into.size() < from.size()) into.resize(from.size(), 0);
      for (std::size_t v = 0; v < from.size(); ++v) into[v] += from[v];
    };
    for (const auto& r : reports) {
      for (std::size_t i = 0; i + 1 < n; ++i) merge(gaps[i], r.gap_histograms[i]);
      merge(errors, r.rank_error_histogram);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t v = 0; v < gaps[i].size(); ++v) {
        if (gaps[i][v]) hist.row({"d_" + num(i + 1), num(v), num(gaps[i][v])});
      }
    }
    for (std::size_t v = 0; v < errors.size(); ++v) {
      if (errors[v]) hist.row({"rank_error", num(v), num(errors[v])});
    }
  }

  if (!a.summary_out.empty()) {
    Json doc;
    doc["config"] = config;
    long double sum = 0.0L;
    std::uint64_t measured = 0, max = 0;
    for (const auto& r : reports) {
      sum += r.mean_rank_error * static_cast<long double>(r.measured);
      measured += r.measured;
      max = std::max(max, r.max_rank_error);
    }
    doc["measured_steps"] = measured;
    doc["mean_rank_error"] = measured ? static_cast<double>(sum / measured) : 0.0;
    doc["max_rank_error"] = max;
    doc["expected_rank_error"] = mq::expected_rank_error(sigma);
    write_json(a.summary_out, doc);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate ejp

struct EjpArgs {
  ChoiceArgs choice;
  std::string steps = "1e5";
  std::string burnin = "1e4";
  std::string trials = "1";
  std::string init = "zeros";
  bool final_state = false;
  bool billiard = false;
  bool logistic = false;
  std::string snapshot_every = "0";
  std::string grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
};

int cmd_ejp(const CLI::App& app, const EjpArgs& a, const Common& common) {
  const auto seed = resolve_seed(common.seed_text);
  const Json config = config_json(app, seed);
  const auto steps = parse_count(a.steps, "--steps");
  const auto burnin = parse_count(a.burnin, "--burnin");
  const auto trials = parse_count(a.trials, "--trials");
  if (trials == 0) throw UsageError("--trials must be >= 1");
  mq::RandomSource root(seed);

  if (a.logistic) {
    mq::LogisticOptions lo;
    lo.n = a.choice.n.empty() ? 4096 : parse_n(a.choice.n);
    if (!a.choice.sigma.empty() || (!a.choice.c.empty() && parse_real(a.choice.c, "--c") != 2.0)) {
      throw UsageError("--logistic is defined for c = 2 only");
    }
    lo.burnin = burnin;
    lo.steps = steps;
    lo.trials = trials;
    lo.snapshot_every = parse_count(a.snapshot_every, "--snapshot-every");
    lo.init = parse_init(a.init);
    lo.grid = parse_reals(a.grid, "--grid");
    CsvWriter csv(common.out, config, {"x", "empirical", "finite_n_formula", "limit"});
    if (steps == 0) return kExitOk;
    for (const auto& row : mq::logistic_positions(lo, root)) {
      csv.row({num(row.x), num(row.empirical), num(row.finite_n), num(row.limit)});
    }
    return kExitOk;
  }

  const auto sigma = make_sigma(a.choice);
  mq::require_star(sigma);
  const auto init = parse_init(a.init);
  const auto mode = a.billiard ? mq::JumpMode::billiard : mq::JumpMode::reinsert;
  CsvWriter csv(common.out, config, {"trial", "i", "gap"});
  if (steps == 0) return kExitOk;
  // Per trial: post-burn-in time average of each gap, or the final gaps.
  const auto per_trial = mq::parallel_trials(trials, root, [&](std::size_t, mq::RandomSource& r) {
    mq::TokenState state = init == mq::InitKind::stationary
                               ? mq::TokenState::from_gaps(mq::ejp_stationary_gap_sampler(sigma, r))
                               : mq::TokenState::zeros(sigma.n());
    for (std::uint64_t s = 0; s < burnin; ++s) mq::ejp_step(state, sigma, r, mode);
    std::vector<long double> sums(sigma.n() - 1, 0.0L);
    for (std::uint64_t s = 0; s < steps; ++s) {
      mq::ejp_step(state, sigma, r, mode);
      if (!a.final_state) {
        for (std::size_t i = 0; i + 1 < sigma.n(); ++i) sums[i] += state.t[i + 1] - state.t[i];
      }
    }
    std::vector<double> out;
    if (a.final_state) return state.gaps();
    for (auto v : sums) out.push_back(static_cast<double>(v / steps));
    return out;
  });
  for (std::size_t t = 0; t < per_trial.size(); ++t) {
    for (std::size_t i = 0; i < per_trial[t].size(); ++i) {
      csv.row({num(t), num(i + 1), num(per_trial[t][i])});
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate cankick / diverge

struct CankickArgs {
  std::string n;
  std::string horizon = "100";
  std::string trials = "1e4";
};

int cmd_cankick(const CLI::App& app, const CankickArgs& a, const Common& common) {
  const auto seed = resolve_seed(common.seed_text);
  const Json config = config_json(app, seed);
  const auto n = parse_n(a.n);
  const double horizon = parse_real(a.horizon, "--horizon");
  if (!(horizon > 0.0)) throw UsageError("--horizon must be positive");
  const auto trials = parse_count(a.trials, "--trials");
  CsvWriter csv(common.out, config, {"trial", "i", "gap"});
  const auto runs = mq::parallel_trials(trials, mq::RandomSource(seed),
                                        [&](std::size_t, mq::RandomSource& r) {
                                          return mq::can_kick_run(n, horizon, r);
                                        });
  for (std::size_t t = 0; t < runs.size(); ++t) {
    for (std::size_t i = 0; i < runs[t].size(); ++i) csv.row({num(t), num(i), num(runs[t][i])});
  }
  return kExitOk;
}

struct DivergeArgs {
  ChoiceArgs choice;
  std::string checkpoints = "1e3,1e4,1e5";
  std::string trials = "100";
};

int cmd_diverge(const CLI::App& app, const DivergeArgs& a, const Common& common) {
  const auto seed = resolve_seed(common.seed_text);
  const Json config = config_json(app, seed);
  ChoiceArgs choice = a.choice;
  if (choice.sigma.empty() && choice.c.empty()) choice.sigma = "uniform";
  const auto sigma = make_sigma(choice);
  const auto checkpoints = parse_counts(a.checkpoints, "--checkpoints");
  const auto trials = parse_count(a.trials, "--trials");
  if (trials == 0) throw UsageError("--trials must be >= 1");
  mq::RandomSource rng(seed);
  const auto means = mq::divergence_experiment(sigma, checkpoints, trials, rng);
  auto sorted = checkpoints;
  std::sort(sorted.begin(), sorted.end());
  CsvWriter csv(common.out, config, {"step", "mean_spread"});
  for (std::size_t k = 0; k < sorted.size(); ++k) csv.row({num(sorted[k]), num(means[k])});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// replay

struct ReplayArgs {
  std::string n = "16";
  std::string c = "2";
  std::string initial = "1e7";
  std::string deletions = "1e6";
  std::string burnin = "0";
  std::string checkpoints;
  std::string hist_out;
  std::string summary_out;
};

int cmd_replay(const CLI::App& app, const ReplayArgs& a, const Common& common) {
  const auto seed = resolve_seed(common.seed_text);
  const Json config = config_json(app, seed);
  mq::ReplayOptions ro;
  ro.n = parse_n(a.n);
  ro.c = parse_real(a.c, "--c");
  if (!(ro.c > 1.0)) {
    throw mq::DivergenceError(1, "c = " + num(ro.c) + " <= 1: the rank error diverges");
  }
  ro.initial = parse_count(a.initial, "--initial");
  ro.deletions = parse_count(a.deletions, "--deletions");
  ro.burnin = parse_count(a.burnin, "--burnin");
  ro.checkpoints = parse_counts(a.checkpoints, "--checkpoints");
  if (a.checkpoints.empty()) ro.checkpoints = {0, ro.deletions};
  mq::RandomSource rng(seed);
  const auto report = mq::sequential_replay(ro, rng);

  const auto sigma = mq::best_of_c(mq::CParameter(ro.c), ro.n);
  const auto expected = mq::expected_ranks(sigma);
  const auto initial = mq::expected_initial_ranks(ro.n);
  CsvWriter csv(common.out, config,
                {"step", "i", "observed_rank_i", "expected_rank_i", "expected_initial_rank_i"});
  for (const auto& cp : report.checkpoints) {
    for (std::size_t i = 0; i < cp.ranks.size(); ++i) {
      csv.row({num(cp.step), num(i + 1), num(cp.ranks[i]), num(expected[i]), num(initial[i])});
    }
  }
  if (!a.hist_out.empty()) {
    CsvWriter hist(a.hist_out, config, {"coordinate", "value", "count"});
    for (std::size_t v = 0; v < report.histogram.size(); ++v) {
      if (report.histogram[v]) hist.row({"rank_error", num(v), num(report.histogram[v])});
    }
  }
  if (!a.summary_out.empty()) {
    Json doc;
    doc["config"] = config;
    doc["deletions"] = report.rank_errors.size();
    doc["measured"] = ro.deletions > ro.burnin ? ro.deletions - ro.burnin : 0;
    doc["mean_rank_error"] = report.mean;
    doc["max_rank_error"] = report.max;
    doc["expected_rank_error"] = mq::expected_rank_error(sigma);
    write_json(a.summary_out, doc);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string suite;
  std::string n;
  std::string c;
};

int cmd_verify(const CLI::App& app, const VerifyArgs& a, const Common& common) {
  const auto& names = mq::suite_names();
  if (std::find(names.begin(), names.end(), a.suite) == names.end()) {
    std::string list;
    for (const auto& s : names) list += (list.empty() ? "" : ", ") + s;
    throw UsageError("unknown suite '" + a.suite + "' (known: " + list + ")");
  }
  const auto seed = resolve_seed(common.seed_text);
  mq::SuiteConfig sc;
  sc.seed = seed;
  if (!a.n.empty()) sc.n = parse_n(a.n);
  if (!a.c.empty()) sc.c = parse_real(a.c, "--c");
  const auto verdict = mq::run_suite(a.suite, sc);

  Json doc;
  doc["config"] = config_json(app, seed);
  doc["suite"] = verdict.suite;
  doc["passed"] = verdict.passed();
  doc["seconds"] = verdict.seconds;
  Json checks = Json::array();
  for (const auto& c : verdict.checks) {
    Json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["value"] = c.value;
    j["relation"] = c.relation;
    j["threshold"] = c.threshold;
    j["gof"] = c.gof ? gof_json(*c.gof) : Json(nullptr);
    checks.push_back(j);
  }
  doc["checks"] = checks;
  write_json(common.out, doc);
  for (const auto& c : verdict.checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << num(c.value) << ' '
              << c.relation << ' ' << num(c.threshold) << '\n';
  }
  return verdict.passed() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string threads = "1";
  std::string ops = "1e6";
  std::string mix = "1:1";
  std::string queues;
  std::string prepopulate = "0";
  std::string c = "2";
};

/// "insert:delete" ratio, or "insert-only" / "delete-only".
double parse_mix(const std::string& text) {
  if (text == "insert-only") return 1.0;
  if (text == "delete-only") return 0.0;
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw UsageError("--mix must be insert:delete, e.g. 1:1");
  const double ins = parse_real(parts[0], "--mix");
  const double del = parse_real(parts[1], "--mix");
  if (ins < 0.0 || del < 0.0 || !(ins + del > 0.0)) {
    throw UsageError("--mix weights must be non-negative and not both zero");
  }
  return ins / (ins + del);
}

int cmd_bench(const CLI::App& app, const BenchArgs& a, const Common& common) {
  const auto seed = resolve_seed(common.seed_text);
  mq::StressOptions so;
  so.threads = parse_count(a.threads, "--threads");
  if (so.threads == 0) throw UsageError("--threads must be >= 1");
  so.ops = parse_count(a.ops, "--ops");
  so.insert_fraction = parse_mix(a.mix);
  so.queues = a.queues.empty() ? std::max<std::size_t>(2, 2 * so.threads)
                               : parse_n(a.queues);
  so.prepopulate = parse_count(a.prepopulate, "--prepopulate");
  so.c = parse_real(a.c, "--c");
  so.log_pops = so.insert_fraction == 0.0;
  if (!(so.c > 1.0)) throw UsageError("--c must be > 1");
  mq::RandomSource rng(seed);
  const auto r = mq::stress_test(so, rng);

  Json doc;
  doc["config"] = config_json(app, seed);
  doc["threads"] = so.threads;
  doc["queues"] = so.queues;
  doc["ops"] = so.ops;
  doc["seconds"] = r.seconds;
  doc["throughput_ops_per_s"] = r.throughput;
  doc["inserts"] = r.inserts;
  doc["deletes"] = r.deletes;
  doc["empty_deletes"] = r.empty_deletes;
  doc["prepopulated"] = r.prepopulated;
  doc["live"] = r.live;
  doc["lost"] = r.lost;
  doc["duplicated"] = r.duplicated;
  doc["phantom"] = r.phantom;
  if (so.log_pops) doc["per_queue_ascending"] = r.per_queue_ascending;
  doc["conservation"] = r.ok ? "pass" : "fail";
  Json violations = Json::array();
  for (std::size_t k = 0; k < r.violations.size() && k < 20; ++k) {
    violations.push_back(r.violations[k]);
  }
  doc["violations"] = violations;
  write_json(common.out, doc);
  return r.ok && (!so.log_pops || r.per_queue_ascending) ? kExitOk : kExitFailure;
}

void error_json(const std::string& kind, const std::string& message,
                std::optional<std::size_t> index = std::nullopt) {
  Json j;
  j["error"] = kind;
  j["message"] = message;
  if (index) j["index"] = *index;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MultiQueue rank-error analytics, simulators and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mq::kVersion));
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed_text, "RNG seed, decimal or 0x hex (default $MQ_SEED or 1)");
    sub->add_option("--out", common.out, "output path (default stdout)");
    sub->option_defaults()->always_capture_default();
  };

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "exact stationary quantities for a choice distribution");
  add_choice_options(analyze_cmd, analyze.choice, false);
  analyze_cmd->add_option("--format", analyze.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  analyze_cmd->add_flag("--sweep-c", analyze.sweep, "tabulate the integral of f_c against c");
  analyze_cmd->add_option("--sweep-from", analyze.sweep_from)->capture_default_str();
  analyze_cmd->add_option("--sweep-to", analyze.sweep_to)->capture_default_str();
  analyze_cmd->add_option("--sweep-step", analyze.sweep_step)->capture_default_str();
  add_common(analyze_cmd);

  auto* simulate = app.add_subcommand("simulate", "run a simulator");
  simulate->require_subcommand(1);

  ChainArgs chain;
  auto* chain_cmd = simulate->add_subcommand("chain", "discrete gap Markov chain");
  add_choice_options(chain_cmd, chain.choice);
  chain_cmd->add_option("--steps", chain.steps, "measured steps")->capture_default_str();
  chain_cmd->add_option("--burnin", chain.burnin, "discarded steps (default max(1e4, 50 n ln n))");
  chain_cmd->add_option("--thin", chain.thin, "gap histogram stride")->capture_default_str();
  chain_cmd->add_option("--trials", chain.trials)->capture_default_str();
  chain_cmd->add_option("--init", chain.init, "zeros or stationary")->capture_default_str();
  chain_cmd->add_flag("--fast", chain.fast, "geometric batching of skips");
  chain_cmd->add_option("--checkpoints", chain.checkpoints, "comma-separated total step counts");
  chain_cmd->add_option("--hist-out", chain.hist_out, "gap and rank-error histogram CSV");
  chain_cmd->add_option("--summary-out", chain.summary_out, "summary JSON");
  add_common(chain_cmd);

  EjpArgs ejp;
  auto* ejp_cmd = simulate->add_subcommand("ejp", "exponential-jump process");
  add_choice_options(ejp_cmd, ejp.choice, false);
  ejp_cmd->add_option("--steps", ejp.steps)->capture_default_str();
  ejp_cmd->add_option("--burnin", ejp.burnin)->capture_default_str();
  ejp_cmd->add_option("--trials", ejp.trials)->capture_default_str();
  ejp_cmd->add_option("--init", ejp.init, "zeros or stationary")->capture_default_str();
  ejp_cmd->add_flag("--final", ejp.final_state, "emit final gaps instead of time averages");
  ejp_cmd->add_flag("--billiard", ejp.billiard, "billiard-ball stepping");
  ejp_cmd->add_flag("--logistic", ejp.logistic, "emit the logistic position profile (c = 2)");
  ejp_cmd->add_option("--snapshot-every", ejp.snapshot_every, "0 means every n steps")
      ->capture_default_str();
  ejp_cmd->add_option("--grid", ejp.grid, "normalized indices x in (0,1)")->capture_default_str();
  add_common(ejp_cmd);

  CankickArgs cankick;
  auto* cankick_cmd = simulate->add_subcommand("cankick", "can-kicking warm-up process");
  cankick_cmd->add_option("--n", cankick.n)->required();
  cankick_cmd->add_option("--horizon", cankick.horizon)->capture_default_str();
  cankick_cmd->add_option("--trials", cankick.trials)->capture_default_str();
  add_common(cankick_cmd);

  DivergeArgs diverge;
  auto* diverge_cmd = simulate->add_subcommand("diverge", "spread growth for a divergent sigma");
  add_choice_options(diverge_cmd, diverge.choice);
  diverge_cmd->add_option("--checkpoints", diverge.checkpoints)->capture_default_str();
  diverge_cmd->add_option("--trials", diverge.trials)->capture_default_str();
  add_common(diverge_cmd);

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "sequential MultiQueue replay with exact ranks");
  replay_cmd->add_option("--n", replay.n)->capture_default_str();
  replay_cmd->add_option("--c", replay.c)->capture_default_str();
  replay_cmd->add_option("--initial", replay.initial, "initial keys M")->capture_default_str();
  replay_cmd->add_option("--deletions", replay.deletions, "deletions D")->capture_default_str();
  replay_cmd->add_option("--burnin", replay.burnin, "deletions excluded from the summary")
      ->capture_default_str();
  replay_cmd->add_option("--checkpoints", replay.checkpoints, "comma-separated deletion counts");
  replay_cmd->add_option("--hist-out", replay.hist_out, "rank-error histogram CSV");
  replay_cmd->add_option("--summary-out", replay.summary_out, "summary JSON");
  add_common(replay_cmd);

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  verify_cmd->add_option("suite", verify.suite, "suite name")->required();
  verify_cmd->add_option("--n", verify.n, "override the suite's problem size");
  verify_cmd->add_option("--c", verify.c);
  add_common(verify_cmd);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "concurrent throughput and conservation check");
  bench_cmd->add_option("--threads", bench.threads)->capture_default_str();
  bench_cmd->add_option("--ops", bench.ops)->capture_default_str();
  bench_cmd->add_option("--mix", bench.mix, "insert:delete, insert-only or delete-only")
      ->capture_default_str();
  bench_cmd->add_option("--queues", bench.queues, "default 2 * threads");
  bench_cmd->add_option("--prepopulate", bench.prepopulate)->capture_default_str();
  bench_cmd->add_option("--c", bench.c)->capture_default_str();
  add_common(bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(*analyze_cmd, analyze, common);
    if (*chain_cmd) return cmd_chain(*chain_cmd, chain, common);
    if (*ejp_cmd) return cmd_ejp(*ejp_cmd, ejp, common);
    if (*cankick_cmd) return cmd_cankick(*cankick_cmd, cankick, common);
    if (*diverge_cmd) return cmd_diverge(*diverge_cmd, diverge, common);
    if (*replay_cmd) return cmd_replay(*replay_cmd, replay, common);
    if (*verify_cmd) return cmd_verify(*verify_cmd, verify, common);
    if (*bench_cmd) return cmd_bench(*bench_cmd, bench, common);
  } catch (const mq::DivergenceError& e) {
    error_json("divergence", e.what(), e.index());
    return kExitDivergence;
  } catch (const UsageError& e) {
    error_json("usage", e.what());
    return kExitUsage;
  } catch (const mq::ParameterError& e) {
    error_json("usage", e.what());
    return kExitUsage;
  } catch (const mq::ExperimentError& e) {
    error_json("experiment", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
