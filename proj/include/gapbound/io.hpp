#pragma once

// JSON/CSV serialization of pairs, model specs and reports, and atomic file
// output. Needs nlohmann/json on the include path.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gapbound/distfun.hpp"
#include "gapbound/enclosure.hpp"
#include "gapbound/error.hpp"
#include "gapbound/lehmann.hpp"
#include "gapbound/linalg.hpp"
#include "gapbound/models.hpp"
#include "gapbound/operator.hpp"

namespace gapbound::io {

using json = nlohmann::ordered_json;

/// Shortest form with at most `digits` significant digits; '.' decimal
/// point independent of the locale.
inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  if (res.ec != std::errc{}) throw Error(ErrorCode::InvalidArgument, "number formatting failed");
  return std::string(buf, res.ptr);
}

// ------------------------------------------------------------------ pairs

inline json to_json(const SymMatrix& a) { return a.to_rows(); }

inline SymMatrix matrix_from_json(const json& j) {
  return SymMatrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

inline json to_json(const TruncatedPair& p) {
  return {{"dim", p.dim()}, {"m", to_json(p.m_mat)}, {"d", to_json(p.d_mat)}, {"exact_d", p.exact_d}};
}

inline TruncatedPair pair_from_json(const json& j) {
  try {
    SymMatrix m = matrix_from_json(j.at("m"));
    SymMatrix d = matrix_from_json(j.at("d"));
    if (j.contains("dim") && j.at("dim").get<std::size_t>() != m.dim())
      throw Error(ErrorCode::InvalidArgument, "pair: dim does not match matrix size");
    return make_pair(std::move(m), std::move(d), j.value("exact_d", false));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("pair: ") + e.what());
  }
}

// ------------------------------------------------------------ model specs

/// A model together with its truncation sizes. `n` holds one entry per
/// nested truncation; an explicit pair ignores it.
struct ModelSpec {
  std::variant<StepCoefficient, PiecewiseLinearCoefficient, TruncatedPair> model;
  std::vector<std::size_t> n;

  std::string kind() const {
    switch (model.index()) {
      case 0: return "step";
      case 1: return "linear";
      default: return "pair";
    }
  }

  TruncatedPair build(std::size_t size) const {
    if (auto* s = std::get_if<StepCoefficient>(&model)) return build_step(*s, size);
    if (auto* l = std::get_if<PiecewiseLinearCoefficient>(&model)) return build_linear(*l, size);
    return std::get<TruncatedPair>(model);
  }

  std::vector<TruncatedPair> build_all() const {
    if (std::holds_alternative<TruncatedPair>(model)) return {std::get<TruncatedPair>(model)};
    if (n.empty()) throw Error(ErrorCode::InvalidArgument, "model: no truncation size given");
    std::vector<TruncatedPair> out;
    for (std::size_t k : n) out.push_back(build(k));
    return out;
  }

  /// Gap in the essential spectrum used when none is given.
  std::pair<double, double> default_gap() const {
    if (auto* l = std::get_if<PiecewiseLinearCoefficient>(&model)) return {l->alpha_minus, l->alpha_plus};
    if (std::holds_alternative<StepCoefficient>(model)) return {0.0, 1.0};
    const Vector ritz = ritz_spectrum(std::get<TruncatedPair>(model));
    return {ritz.front(), ritz.back()};
  }

  std::optional<KnownSpectrum> spectrum() const {
    if (auto* s = std::get_if<StepCoefficient>(&model)) return step_spectrum(*s);
    if (auto* l = std::get_if<PiecewiseLinearCoefficient>(&model)) return linear_spectrum(*l);
    return std::nullopt;
  }
};

inline std::vector<std::size_t> sizes_from_json(const json& j) {
  if (j.is_array()) return j.get<std::vector<std::size_t>>();
  return {j.get<std::size_t>()};
}

inline ModelSpec model_from_json(const json& j) {
  try {
    ModelSpec spec;
    const std::string kind = j.at("model").get<std::string>();
    if (kind == "step") {
      StepCoefficient c{j.at("cut").get<double>()};
      c.validate();
      spec.model = c;
    } else if (kind == "linear") {
      PiecewiseLinearCoefficient c;
      if (j.contains("alpha")) {
        auto a = j.at("alpha").get<std::vector<double>>();
        if (a.size() != 2) throw Error(ErrorCode::InvalidArgument, "model: alpha needs two entries");
        c.alpha_minus = a[0];
        c.alpha_plus = a[1];
      }
      if (j.contains("beta")) {
        auto b = j.at("beta").get<std::vector<double>>();
        if (b.size() != 2) throw Error(ErrorCode::InvalidArgument, "model: beta needs two entries");
        c.beta_minus = b[0];
        c.beta_plus = b[1];
      }
      c.validate(false);
      spec.model = c;
    } else if (kind == "pair") {
      spec.model = pair_from_json(j);
    } else {
      throw Error(ErrorCode::InvalidArgument, "model: unknown kind '" + kind + "'");
    }
    if (j.contains("n")) spec.n = sizes_from_json(j.at("n"));
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("model: ") + e.what());
  }
}

inline json to_json(const ModelSpec& spec) {
  json j;
  if (auto* s = std::get_if<StepCoefficient>(&spec.model)) {
    j = {{"model", "step"}, {"cut", s->cut}};
  } else if (auto* l = std::get_if<PiecewiseLinearCoefficient>(&spec.model)) {
    j = {{"model", "linear"},
         {"alpha", {l->alpha_minus, l->alpha_plus}},
         {"beta", {l->beta_minus, l->beta_plus}}};
  } else {
    j = to_json(std::get<TruncatedPair>(spec.model));
    j["model"] = "pair";
  }
  if (!spec.n.empty()) j["n"] = spec.n;
  return j;
}

// ---------------------------------------------------------------- reports

inline json to_json(const EnclosureInterval& iv) {
  return {{"sigma", iv.sigma}, {"f_sigma", iv.f_sigma}, {"lower", iv.lower}, {"upper", iv.upper},
          {"s", iv.s},         {"f_s", iv.f_s},         {"t", iv.t},         {"f_t", iv.f_t}};
}

inline json to_json(const EnclosureState& st) {
  json intervals = json::array();
  for (const auto& iv : st.intervals) intervals.push_back(to_json(iv));
  return {{"gap", {st.alpha, st.beta}}, {"assumed_H", true}, {"intervals", intervals}, {"iterations", st.iteration}};
}

inline json to_json(const EnclosureReport& rep) {
  json j = to_json(rep.state);
  json hist = json::array();
  for (const auto& h : rep.history)
    hist.push_back({{"n", h.n}, {"iteration", h.iteration}, {"lower", h.lower}, {"upper", h.upper}});
  j["history"] = hist;
  j["widths"] = rep.widths;
  j["widening_events"] = rep.widening_events;
  return j;
}

inline json to_json(const LehmannResult& r) {
  return {{"nu", r.rho_low},           {"mu", r.rho_high},
          {"tau_plus", r.tau_plus},    {"tau_minus", r.tau_minus},
          {"lower", r.lower_bound},    {"upper", r.upper_bound},
          {"condition_A", r.condition_a}, {"rho_perturbed", r.rho_perturbed}};
}

inline json to_json(const EquivalenceReport& r) {
  return {{"nu", r.nu},
          {"mu", r.mu},
          {"distance_function", {{"s", r.s}, {"f_s", r.f_s}, {"t", r.t}, {"f_t", r.f_t},
                                 {"lower", r.t - r.f_t}, {"upper", r.s + r.f_s}}},
          {"lehmann", to_json(r.lehmann)},
          {"discrepancies", {{"upper", r.upper_discrepancy}, {"lower", r.lower_discrepancy},
                             {"s", r.s_discrepancy}, {"t", r.t_discrepancy}}},
          {"max_discrepancy", r.max_discrepancy()},
          {"tolerance", r.tolerance},
          {"passed", r.passed()}};
}

inline json wrap(const std::string& command, const json& config, const json& result) {
  return {{"command", command}, {"config", config}, {"result", result}};
}

/// `lambda,f,f_prime` rows of a scan.
inline std::string scan_csv(const ScanResult& scan, int digits = 17) {
  std::string out = "lambda,f,f_prime\n";
  for (const auto& p : scan.points) {
    out += format_double(p.lambda, digits);
    out += ',';
    out += format_double(p.f_value, digits);
    out += ',';
    out += format_double(p.f_prime, digits);
    out += '\n';
  }
  return out;
}

// ------------------------------------------------------------------ files

/// Writes through a temporary file in the same directory and renames it into
/// place, so a failed run never leaves a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::InvalidArgument, "cannot rename into " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Accepts either inline JSON or a path to a JSON file.
inline json parse_json_arg(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  const bool inline_doc = first != std::string::npos && (arg[first] == '{' || arg[first] == '[');
  try {
    return json::parse(inline_doc ? arg : read_file(arg));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace gapbound::io
