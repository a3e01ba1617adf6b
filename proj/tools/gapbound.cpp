// gapbound: scan, enclose, bounds, compare and pollute subcommands.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 hypothesis (H) or condition (A) violated.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gapbound/gapbound.hpp"
#include "gapbound/io.hpp"

namespace {

using namespace gapbound;
using io::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitHypothesis = 4;

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionTooLarge:
    case ErrorCode::MuOutsideBrackets:
    case ErrorCode::IndexOutOfRange:
      return kExitConfig;
    case ErrorCode::HypothesisHViolated:
    case ErrorCode::ConditionAViolated:
      return kExitHypothesis;
    default:
      return kExitNumerical;
  }
}

struct Flags {
  std::string config_path;
  std::string model;
  std::vector<std::size_t> n;
  std::size_t m = 0;
  std::string out;
  std::string format;
  double tol = 0.0;
  std::size_t grid = 0;
  std::vector<double> interval;
  double nu = 0.0;
  double mu = 0.0;
  double epsilon_s = 0.0;
  double spurious_threshold = 0.0;
  int digits = 17;
  std::size_t nearest = 4;
  std::size_t collapse = 0;
  double collapse_mu = 0.3;
  std::vector<double> collapse_lambda = {0.0, 1.0};
};

struct Command {
  CLI::App* app = nullptr;
  Flags flags;
};

void add_common(Command& c) {
  auto* a = c.app;
  auto& f = c.flags;
  a->add_option("--config", f.config_path, "JSON config file; flags override its values");
  a->add_option("--model", f.model, "model spec: path or inline JSON");
  a->add_option("--n", f.n, "truncation sizes, comma separated")->delimiter(',');
  a->add_option("--m", f.m, "outer truncation size for F_{m,n}");
  a->add_option("--out", f.out, "output file (default: stdout)");
  a->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  a->add_option("--tol", f.tol, "tolerance for minima and refinement");
  a->add_option("--grid", f.grid, "number of grid points");
  a->add_option("--interval", f.interval, "interval a b")->expected(2);
  a->add_option("--nu", f.nu, "lower Lehmann shift");
  a->add_option("--mu", f.mu, "upper Lehmann shift");
  a->add_option("--epsilon-s", f.epsilon_s, "safeguard epsilon for hat F");
  a->add_option("--spurious-threshold", f.spurious_threshold, "reject minima with F above this");
  a->add_option("--digits", f.digits, "significant digits in CSV output")->check(CLI::Range(1, 17));
}

// Merges the config file with the flags actually given on the command line.
json merged_config(const Command& c) {
  const auto& f = c.flags;
  json cfg = json::object();
  if (!f.config_path.empty()) {
    cfg = io::parse_json_arg(io::read_file(f.config_path));
    if (!cfg.is_object()) throw Error(ErrorCode::InvalidArgument, "config file must hold a JSON object");
  }
  auto given = [&](const char* name) {
    const auto* opt = c.app->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--model")) cfg["model"] = io::parse_json_arg(f.model);
  if (given("--n")) cfg["n"] = f.n;
  if (given("--m")) cfg["m"] = f.m;
  if (given("--format")) cfg["format"] = f.format;
  if (given("--tol")) cfg["tol"] = f.tol;
  if (given("--grid")) cfg["grid"] = f.grid;
  if (given("--interval")) cfg["interval"] = f.interval;
  if (given("--nu")) cfg["nu"] = f.nu;
  if (given("--mu")) cfg["mu"] = f.mu;
  if (given("--epsilon-s")) cfg["epsilon_s"] = f.epsilon_s;
  if (given("--spurious-threshold")) cfg["spurious_threshold"] = f.spurious_threshold;
  if (given("--digits")) cfg["digits"] = f.digits;
  if (given("--nearest")) cfg["nearest"] = f.nearest;
  if (given("--collapse")) cfg["collapse"] = f.collapse;
  if (given("--collapse-mu")) cfg["collapse_mu"] = f.collapse_mu;
  if (given("--collapse-lambda")) cfg["collapse_lambda"] = f.collapse_lambda;
  if (!cfg.contains("model")) throw Error(ErrorCode::InvalidArgument, "no model given (--model or config)");
  // A path inside the config file is resolved here too.
  if (cfg["model"].is_string()) cfg["model"] = io::parse_json_arg(cfg["model"].get<std::string>());
  return cfg;
}

// Resolved run parameters.
struct Run {
  json config;
  io::ModelSpec spec;
  std::size_t m = 0;
  std::string format;
  double tol = 1e-12;
  std::pair<double, double> interval;
  std::optional<std::size_t> grid;
  std::optional<double> nu, mu, spurious;
  double epsilon = 0.0;
  int digits = 17;

  template <class T>
  std::optional<T> get(const char* key) const {
    if (!config.contains(key)) return std::nullopt;
    try {
      return config.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "': " + e.what());
    }
  }

  std::vector<TruncatedPair> pairs() const {
    if (m == 0) return spec.build_all();
    if (std::holds_alternative<TruncatedPair>(spec.model))
      throw Error(ErrorCode::InvalidArgument, "--m needs a step or linear model");
    const bool linear = std::holds_alternative<PiecewiseLinearCoefficient>(spec.model);
    const TruncatedPair big = spec.build(m);
    std::vector<TruncatedPair> out;
    for (std::size_t k : spec.n) {
      if (k > m) throw Error(ErrorCode::InvalidArgument, "--m must not be below any --n");
      if (linear) out.push_back(compress_pair(big.m_mat, m - k, 2 * k + 1, 0, big.dim()));
      else out.push_back(compress_pair(big.m_mat, 0, k, 0, big.dim()));
    }
    return out;
  }

  std::size_t grid_points() const {
    if (grid) return *grid;
    const double len = interval.second - interval.first;
    return static_cast<std::size_t>(std::llround(256.0 * len)) + 1;
  }
};

Run resolve(const Command& c, const std::string& default_format) {
  Run run;
  run.config = merged_config(c);
  run.spec = io::model_from_json(run.config.at("model"));
  if (auto n = run.get<json>("n")) run.spec.n = io::sizes_from_json(*n);
  run.m = run.get<std::size_t>("m").value_or(0);
  run.format = run.get<std::string>("format").value_or(default_format);
  if (run.format != "csv" && run.format != "json")
    throw Error(ErrorCode::InvalidArgument, "format must be csv or json");
  run.tol = run.get<double>("tol").value_or(1e-12);
  if (!(run.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  run.interval = run.spec.default_gap();
  if (auto iv = run.get<std::vector<double>>("interval")) {
    if (iv->size() != 2) throw Error(ErrorCode::InvalidArgument, "interval needs two values");
    run.interval = {(*iv)[0], (*iv)[1]};
  }
  if (!(run.interval.first < run.interval.second))
    throw Error(ErrorCode::InvalidArgument, "interval must be nondegenerate");
  run.grid = run.get<std::size_t>("grid");
  if (run.grid && *run.grid < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two points");
  run.nu = run.get<double>("nu");
  run.mu = run.get<double>("mu");
  run.spurious = run.get<double>("spurious_threshold");
  run.epsilon = run.get<double>("epsilon_s").value_or(0.0);
  if (run.epsilon < 0.0) throw Error(ErrorCode::InvalidArgument, "epsilon-s must be non-negative");
  run.digits = run.get<int>("digits").value_or(17);
  if (run.digits < 1 || run.digits > 17) throw Error(ErrorCode::InvalidArgument, "digits must be in 1..17");
  run.config["model"] = io::to_json(run.spec);
  return run;
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty()) std::cout << content << std::flush;
  else io::write_atomic(out, content);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ------------------------------------------------------------------ scan

int cmd_scan(const Command& c) {
  const Run run = resolve(c, "csv");
  const auto pairs = run.pairs();
  if (run.format == "csv" && pairs.size() != 1)
    throw Error(ErrorCode::InvalidArgument, "csv scan takes exactly one n; use --format json for several");
  json results = json::array();
  std::string csv;
  for (const auto& pair : pairs) {
    const ScanResult s = scan(pair, run.interval.first, run.interval.second, run.grid_points());
    if (run.format == "csv") {
      csv = io::scan_csv(s, run.digits);
      break;
    }
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back({p.lambda, p.f_value, p.f_prime});
    json mins = json::array();
    for (const auto& mn : s.minima) mins.push_back({{"sigma", mn.sigma}, {"f", mn.f_value}});
    results.push_back({{"dim", pair.dim()}, {"columns", {"lambda", "f", "f_prime"}}, {"points", pts}, {"minima", mins}});
  }
  emit(c.flags.out, run.format == "csv" ? csv : dump(io::wrap("scan", run.config, results)));
  return kExitOk;
}

// --------------------------------------------------------------- enclose

int cmd_enclose(const Command& c) {
  const Run run = resolve(c, "json");
  const auto pairs = run.pairs();
  const auto [alpha, beta] = run.interval;
  EnclosureOptions opts;
  opts.epsilon = run.epsilon;
  opts.tol = run.tol;

  const ScanResult s = scan(pairs.front(), alpha, beta, run.grid_points());
  const auto minima = local_minima(s, pairs.front(), std::max(run.tol, 1e-13));
  const auto kept = filter_candidates(minima, alpha, beta, run.spurious);
  json cand = json::array();
  for (const auto& mn : minima) {
    const bool used = std::any_of(kept.begin(), kept.end(), [&](const Minimum& k) { return k.sigma == mn.sigma; });
    cand.push_back({{"sigma", mn.sigma}, {"f", mn.f_value}, {"kept", used}});
  }
  if (kept.empty()) throw Error(ErrorCode::NoMinimumFound, "no candidate minimum survived filtering");

  GapProblem gap{alpha, beta, {}};
  for (const auto& k : kept) gap.sigmas.push_back(k.sigma);
  try {
    const EnclosureReport rep = enclose(pairs, gap, opts);
    json result = io::to_json(rep);
    result["candidates"] = cand;
    emit(c.flags.out, dump(io::wrap("enclose", run.config, result)));
    return kExitOk;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HypothesisHViolated) throw;
    json result = {{"gap", {alpha, beta}},
                   {"assumed_H", false},
                   {"error", std::string(to_string(e.code()))},
                   {"message", e.what()},
                   {"refuting_indices", e.indices()},
                   {"candidates", cand}};
    emit(c.flags.out, dump(io::wrap("enclose", run.config, result)));
    std::cerr << "gapbound: " << e.what() << "\n";
    return kExitHypothesis;
  }
}

// ----------------------------------------------------- bounds and compare

std::pair<double, double> shifts(const Run& run) {
  const double nu = run.nu.value_or(run.interval.first);
  const double mu = run.mu.value_or(run.interval.second);
  if (!(nu < mu)) throw Error(ErrorCode::InvalidArgument, "need nu < mu");
  return {nu, mu};
}

int cmd_bounds(const Command& c) {
  const Run run = resolve(c, "json");
  const auto [nu, mu] = shifts(run);
  json results = json::array();
  for (const auto& pair : run.pairs()) {
    json r = io::to_json(tau_extremes(pair, nu, mu));
    r["dim"] = pair.dim();
    results.push_back(r);
  }
  emit(c.flags.out, dump(io::wrap("bounds", run.config, results)));
  return kExitOk;
}

int cmd_compare(const Command& c) {
  const Run run = resolve(c, "json");
  const auto [nu, mu] = shifts(run);
  EnclosureOptions opts;
  opts.tol = run.tol;
  json results = json::array();
  for (const auto& pair : run.pairs()) {
    json r = io::to_json(equivalence_check(pair, nu, mu, opts));
    r["dim"] = pair.dim();
    results.push_back(r);
  }
  emit(c.flags.out, dump(io::wrap("compare", run.config, results)));
  return kExitOk;
}

// --------------------------------------------------------------- pollute

int cmd_pollute(const Command& c) {
  const Run run = resolve(c, "json");
  const std::size_t nearest = run.get<std::size_t>("nearest").value_or(4);
  const auto [alpha, beta] = run.interval;
  const double centre = 0.5 * (alpha + beta);
  const auto* step = std::get_if<StepCoefficient>(&run.spec.model);

  json rows = json::array();
  std::string csv = "n,rank,ritz,collapse_quotient\n";
  for (const auto& pair : run.pairs()) {
    const auto eig = eig_sym(pair.m_mat);
    std::vector<std::size_t> order(eig.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(eig[a].value - centre) < std::abs(eig[b].value - centre);
    });
    order.resize(std::min(nearest, order.size()));
    std::sort(order.begin(), order.end());

    json in_gap = json::array();
    for (const auto& e : eig)
      if (e.value > alpha && e.value < beta) in_gap.push_back(e.value);
    json near = json::array();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const auto& e = eig[order[rank]];
      json row = {{"ritz", e.value}};
      std::string q;
      if (step && run.m == 0) {
        const double cq = collapse_quotient(e.vector);
        row["collapse_quotient"] = cq;
        q = io::format_double(cq, run.digits);
      }
      near.push_back(row);
      csv += std::to_string(pair.dim()) + "," + std::to_string(rank) + "," + io::format_double(e.value, run.digits) +
             "," + q + "\n";
    }
    rows.push_back({{"dim", pair.dim()}, {"nearest", near}, {"in_gap", in_gap}});
  }

  json result = {{"centre", centre}, {"ritz", rows}};
  if (auto count = run.get<std::size_t>("collapse"); count && *count > 0) {
    const double mu = run.get<double>("collapse_mu").value_or(0.3);
    const auto lam = run.get<std::vector<double>>("collapse_lambda").value_or(std::vector<double>{0.0, 1.0});
    if (lam.size() != 2) throw Error(ErrorCode::InvalidArgument, "collapse-lambda needs two values");
    const auto pc = synthesize_pollution(std::vector<double>(*count, lam[0]), std::vector<double>(*count, lam[1]), mu);
    const SymMatrix ritz = pollution_ritz_matrix(pc, *count);
    SymMatrix diff = ritz;
    diff.shift_diagonal(-mu);
    result["collapse"] = {{"N", *count},
                        {"mu", mu},
                        {"lambda0", lam[0]},
                        {"lambda1", lam[1]},
                        {"angles", pc.angles},
                        {"ritz_values", eigenvalues_sym(ritz)},
                        {"max_deviation", diff.max_abs()}};
  }
  const std::string report = dump(io::wrap("pollute", run.config, result));
  if (run.format == "csv") {
    emit(c.flags.out, csv);
    if (!c.flags.out.empty()) io::write_atomic(c.flags.out + ".json", report);
  } else {
    emit(c.flags.out, report);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guaranteed eigenvalue enclosures in spectral gaps"};
  app.require_subcommand(1);

  Command scan_c{app.add_subcommand("scan", "tabulate F_n and F_n' on a grid"), {}};
  Command enclose_c{app.add_subcommand("enclose", "certified enclosures of the eigenvalues in a gap"), {}};
  Command bounds_c{app.add_subcommand("bounds", "Lehmann bounds for one eigenvalue between nu and mu"), {}};
  Command compare_c{app.add_subcommand("compare", "distance-function vs Lehmann bounds"), {}};
  Command pollute_c{app.add_subcommand("pollute", "Ritz values near the gap and collapse quotients"), {}};
  for (Command* c : {&scan_c, &enclose_c, &bounds_c, &compare_c, &pollute_c}) add_common(*c);
  pollute_c.app->add_option("--nearest", pollute_c.flags.nearest, "Ritz values reported per n");
  pollute_c.app->add_option("--collapse", pollute_c.flags.collapse, "size N of the synthetic collapse demo");
  pollute_c.app->add_option("--collapse-mu", pollute_c.flags.collapse_mu, "target value of the demo");
  pollute_c.app->add_option("--collapse-lambda", pollute_c.flags.collapse_lambda, "eigenvalues below and above")
      ->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (scan_c.app->parsed()) return cmd_scan(scan_c);
    if (enclose_c.app->parsed()) return cmd_enclose(enclose_c);
    if (bounds_c.app->parsed()) return cmd_bounds(bounds_c);
    if (compare_c.app->parsed()) return cmd_compare(compare_c);
    return cmd_pollute(pollute_c);
  } catch (const Error& e) {
    std::cerr << "gapbound: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const io::json::exception& e) {
    std::cerr << "gapbound: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "gapbound: " << e.what() << "\n";
    return kExitNumerical;
  }
}
