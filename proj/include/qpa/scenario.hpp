#pragma once

// Scenario files, experiment runs and result tables.
//
// A scenario is a JSON document:
//
//   {
//     "schema_version": 1,
//     "id": "bsc-sweep",
//     "rng_seed": 7,
//     "source": {"kind": "bsc-correlated-classical", "p": 0.1},
//     "family": "toeplitz", "n": 4, "s": 2, "epsilon": 0.1,
//     "sweep": {"s": [1, 2, 3], "epsilon": [0.1, 0.01], "p": [0.05, 0.1]},
//     "cap_seeds": 16777216,
//     "monte_carlo_samples": 10000,
//     "aep": {"rho": {"diag": [0.9, 0.1]}, "epsilon": 0.01, "ladder": [4, 64, 1024]},
//     "lemma": {"property": "trace_vs_hilbert_schmidt", "trial": 3, "tampered": false}
//   }
//
// Only schema_version and id are always required; each command checks for
// the sections it needs. README.md documents every field and output column.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qpa/entropy.hpp"
#include "qpa/error.hpp"
#include "qpa/hashing.hpp"
#include "qpa/lemmas.hpp"
#include "qpa/pa.hpp"
#include "qpa/parallel.hpp"
#include "qpa/random.hpp"
#include "qpa/rational.hpp"
#include "qpa/states.hpp"

namespace qpa {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Largest |Z| * dim(adversary) a scenario may describe.
inline constexpr std::size_t kSourceSizeCap = std::size_t{1} << 16;

// ---------------------------------------------------------------------------
// Field access with error messages that name the offending field.

namespace detail {

[[noreturn]] inline void invalid(const std::string& path, const std::string& what) {
  raise(ErrorKind::ValidationError, path + ": " + what);
}

inline const json& member(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) invalid(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) invalid(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(path, "must be finite");
  return x;
}

inline std::uint64_t as_unsigned(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    invalid(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) invalid(path, "expected a string");
  return v.get<std::string>();
}

inline const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) invalid(path, "expected an array");
  return v;
}

inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) invalid(join(path, key), "unknown field");
  }
}

inline double as_probability(const json& v, const std::string& path) {
  const double p = as_number(v, path);
  if (p < 0.0 || p > 1.0) invalid(path, "must lie in [0, 1]");
  return p;
}

inline double as_epsilon(const json& v, const std::string& path) {
  const double e = as_number(v, path);
  if (e < 0.0 || e >= 1.0) invalid(path, "must lie in [0, 1)");
  return e;
}

/// A real matrix, or {"re": [[...]], "im": [[...]]}, or {"diag": [...]}.
inline ComplexMatrix as_matrix(const json& v, const std::string& path) {
  auto rows_of = [&](const json& m, const std::string& p) {
    as_array(m, p);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < m.size(); ++i) {
      as_array(m[i], at(p, i));
      std::vector<double> row;
      for (std::size_t j = 0; j < m[i].size(); ++j) row.push_back(as_number(m[i][j], at(at(p, i), j)));
      if (row.size() != m.size()) invalid(at(p, i), "matrix must be square");
      rows.push_back(std::move(row));
    }
    if (rows.empty()) invalid(p, "matrix is empty");
    return rows;
  };
  if (v.is_object() && v.contains("diag")) {
    reject_unknown(v, {"diag"}, path);
    const auto& d = as_array(v["diag"], path + ".diag");
    if (d.empty()) invalid(path + ".diag", "empty");
    std::vector<double> values;
    for (std::size_t i = 0; i < d.size(); ++i) values.push_back(as_number(d[i], at(path + ".diag", i)));
    return ComplexMatrix::diagonal(values);
  }
  if (v.is_object()) {
    reject_unknown(v, {"re", "im"}, path);
    const auto re = rows_of(member(v, "re", path), path + ".re");
    std::vector<std::vector<double>> im(re.size(), std::vector<double>(re.size(), 0.0));
    if (v.contains("im")) {
      im = rows_of(v["im"], path + ".im");
      if (im.size() != re.size()) invalid(path + ".im", "dimension differs from re");
    }
    ComplexMatrix m(re.size(), re.size());
    for (std::size_t i = 0; i < re.size(); ++i)
      for (std::size_t j = 0; j < re.size(); ++j) m(i, j) = complex{re[i][j], im[i][j]};
    return m;
  }
  const auto re = rows_of(v, path);
  ComplexMatrix m(re.size(), re.size());
  for (std::size_t i = 0; i < re.size(); ++i)
    for (std::size_t j = 0; j < re.size(); ++j) m(i, j) = re[i][j];
  return m;
}

inline DensityOperator as_density(const json& v, const std::string& path) {
  try {
    return DensityOperator(as_matrix(v, path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ValidationError) throw;
    invalid(path, e.message());
  }
}

/// Probabilities as numbers, or all as "p/q" strings for exact arithmetic.
inline ClassicalDistribution as_distribution(const json& v, const std::string& path) {
  as_array(v, path);
  if (v.empty()) invalid(path, "empty");
  const bool exact = v[0].is_string();
  try {
    if (exact) {
      std::vector<Rational> probs;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) invalid(at(path, i), "mix of fractions and numbers");
        const auto r = Rational::parse(v[i].get<std::string>());
        if (!r) invalid(at(path, i), "not a fraction p/q: '" + v[i].get<std::string>() + "'");
        probs.push_back(*r);
      }
      return ClassicalDistribution(std::move(probs));
    }
    std::vector<double> probs;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].is_string()) invalid(at(path, i), "mix of fractions and numbers");
      probs.push_back(as_number(v[i], at(path, i)));
    }
    return ClassicalDistribution(std::move(probs));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ValidationError) throw;
    std::string msg = e.message();
    if (msg.rfind("probs: ", 0) == 0) msg = msg.substr(7);
    invalid(path, msg);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario model.

struct SweepSettings {
  std::vector<unsigned> s;
  std::vector<double> epsilon;
  std::vector<double> p;
};

struct AepSettings {
  DensityOperator rho;
  double epsilon = 0.0;
  std::vector<std::uint64_t> ladder;
};

struct ReplaySettings {
  std::string property;
  std::size_t trial = 0;
  bool tampered = false;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string id;
  std::uint64_t rng_seed = 1;
  std::optional<json> source;  // kept raw: generators are rebuilt per sweep point
  FamilyKind family = FamilyKind::Toeplitz;
  unsigned n = 0;
  unsigned s = 0;
  double epsilon = 0.0;
  SweepSettings sweep;
  std::optional<std::uint64_t> cap_seeds;
  std::optional<std::uint64_t> monte_carlo_samples;
  std::optional<AepSettings> aep;
  std::optional<ReplaySettings> replay;
};

/// Kinds of generated and explicit sources.
inline bool source_takes_parameter(std::string_view kind) {
  return kind == "bsc-correlated-classical" || kind == "depolarized-copy";
}

/// Builds the source ensemble over Z = {0,1}^n. `p` overrides the
/// parameter stored in the source section.
inline CqEnsemble build_source(const json& src, unsigned n, std::optional<double> p = std::nullopt) {
  const std::string path = "source";
  if (!src.is_object()) detail::invalid(path, "expected an object");
  const std::string kind = detail::as_string(detail::member(src, "kind", path), path + ".kind");
  const std::size_t values = std::size_t{1} << n;

  double param = 0.0;
  if (source_takes_parameter(kind)) {
    detail::reject_unknown(src, {"kind", "p"}, path);
    param = p ? *p : detail::as_probability(detail::member(src, "p", path), path + ".p");
    if (p && (*p < 0.0 || *p > 1.0)) detail::invalid("sweep.p", "must lie in [0, 1]");
  } else if (p) {
    detail::invalid("sweep.p", "source kind '" + kind + "' has no parameter");
  }

  auto check_size = [&](std::size_t dim) {
    if (values > kSourceSizeCap / dim) {
      raise(ErrorKind::CapExceeded, "n: |Z| * adversary dimension = 2^" + std::to_string(n) + " * " +
                                        std::to_string(dim) + " exceeds " + std::to_string(kSourceSizeCap));
    }
  };

  if (kind == "uniform") {
    detail::reject_unknown(src, {"kind"}, path);
    return CqEnsemble::independent(ClassicalDistribution::uniform(values), DensityOperator::trivial());
  }
  if (kind == "explicit") {
    detail::reject_unknown(src, {"kind", "probs", "conditionals"}, path);
    auto probs = detail::as_distribution(detail::member(src, "probs", path), path + ".probs");
    if (probs.size() != values) {
      detail::invalid(path + ".probs", "has " + std::to_string(probs.size()) + " entries, expected 2^n = " +
                                           std::to_string(values));
    }
    if (!src.contains("conditionals")) return CqEnsemble::independent(std::move(probs), DensityOperator::trivial());
    const auto& conds = detail::as_array(src["conditionals"], path + ".conditionals");
    if (conds.size() != values) {
      detail::invalid(path + ".conditionals", "has " + std::to_string(conds.size()) + " entries, expected " +
                                                  std::to_string(values));
    }
    std::vector<DensityOperator> rho;
    for (std::size_t z = 0; z < values; ++z) {
      rho.push_back(detail::as_density(conds[z], detail::at(path + ".conditionals", z)));
      if (rho.back().dim() != rho.front().dim()) {
        detail::invalid(detail::at(path + ".conditionals", z), "dimension differs from the first conditional");
      }
    }
    check_size(rho.front().dim());
    return CqEnsemble(std::move(probs), std::move(rho));
  }
  if (kind == "perfect-copy" || kind == "depolarized-copy") {
    if (kind == "perfect-copy") detail::reject_unknown(src, {"kind"}, path);
    check_size(values);
    std::vector<DensityOperator> rho;
    for (std::size_t z = 0; z < values; ++z) {
      std::vector<double> diag(values, param / static_cast<double>(values));
      diag[z] += 1.0 - param;
      rho.push_back(DensityOperator::diagonal(diag));
    }
    return CqEnsemble(ClassicalDistribution::uniform(values), std::move(rho));
  }
  if (kind == "bsc-correlated-classical") {
    // W = Z xor noise, each bit flipped independently with probability p.
    check_size(values);
    std::vector<DensityOperator> rho;
    for (std::size_t z = 0; z < values; ++z) {
      std::vector<double> diag(values);
      for (std::size_t w = 0; w < values; ++w) {
        const int flips = std::popcount(z ^ w);
        diag[w] = std::pow(param, flips) * std::pow(1.0 - param, static_cast<int>(n) - flips);
      }
      rho.push_back(DensityOperator::diagonal(diag));
    }
    return CqEnsemble(ClassicalDistribution::uniform(values), std::move(rho));
  }
  detail::invalid(path + ".kind", "unknown source kind '" + kind + "'");
}

namespace detail {

inline AepSettings parse_aep(const json& v) {
  const std::string path = "aep";
  if (!v.is_object()) invalid(path, "expected an object");
  reject_unknown(v, {"rho", "epsilon", "ladder"}, path);
  AepSettings a{as_density(member(v, "rho", path), path + ".rho"), as_epsilon(member(v, "epsilon", path), path + ".epsilon"),
            {}};
  if (a.rho.dim() > 4) invalid(path + ".rho", "dimension is limited to 4");
  const auto& ladder = as_array(member(v, "ladder", path), path + ".ladder");
  if (ladder.empty()) invalid(path + ".ladder", "empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const auto k = as_unsigned(ladder[i], at(path + ".ladder", i));
    if (k < 1 || k > 4096) invalid(at(path + ".ladder", i), "must lie in [1, 4096]");
    a.ladder.push_back(k);
  }
  return a;
}

inline ReplaySettings parse_replay(const json& v) {
  const std::string path = "lemma";
  if (!v.is_object()) invalid(path, "expected an object");
  reject_unknown(v, {"property", "trial", "tampered", "lhs", "rhs"}, path);
  ReplaySettings r;
  r.property = as_string(member(v, "property", path), path + ".property");
  try {
    (void)property_index(r.property);
  } catch (const Error&) {
    invalid(path + ".property", "unknown property '" + r.property + "'");
  }
  r.trial = as_unsigned(member(v, "trial", path), path + ".trial");
  if (v.contains("tampered")) {
    if (!v["tampered"].is_boolean()) invalid(path + ".tampered", "expected true or false");
    r.tampered = v["tampered"].get<bool>();
  }
  return r;
}

inline std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // The reported byte is one past the last character read.
    const auto [line, column] = detail::line_and_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    raise(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
  }
  if (!doc.is_object()) raise(ErrorKind::ParseError, "line 1, column 1: top level must be a JSON object");

  using namespace detail;
  reject_unknown(doc,
                 {"schema_version", "id", "rng_seed", "source", "family", "n", "s", "epsilon", "sweep", "cap_seeds",
                  "monte_carlo_samples", "aep", "lemma"},
                 "");
  Scenario sc;
  sc.schema_version = static_cast<int>(as_unsigned(member(doc, "schema_version", ""), "schema_version"));
  if (sc.schema_version != kSchemaVersion) {
    invalid("schema_version", "unsupported version " + std::to_string(sc.schema_version) + ", expected " +
                                  std::to_string(kSchemaVersion));
  }
  sc.id = as_string(member(doc, "id", ""), "id");
  if (sc.id.empty()) invalid("id", "empty");
  if (doc.contains("rng_seed")) sc.rng_seed = as_unsigned(doc["rng_seed"], "rng_seed");
  if (doc.contains("cap_seeds")) sc.cap_seeds = as_unsigned(doc["cap_seeds"], "cap_seeds");
  if (doc.contains("monte_carlo_samples")) {
    sc.monte_carlo_samples = as_unsigned(doc["monte_carlo_samples"], "monte_carlo_samples");
    if (*sc.monte_carlo_samples < 2) invalid("monte_carlo_samples", "must be at least 2");
  }

  if (doc.contains("source")) {
    sc.source = doc["source"];
    const std::string family = as_string(member(doc, "family", ""), "family");
    try {
      sc.family = parse_family_kind(family);
    } catch (const Error&) {
      invalid("family", "unknown family '" + family + "' (toeplitz, gf2n_mult, all_functions)");
    }
    sc.n = static_cast<unsigned>(as_unsigned(member(doc, "n", ""), "n"));
    if (sc.n < 1 || sc.n > 24) invalid("n", "must lie in [1, 24]");
    sc.s = static_cast<unsigned>(as_unsigned(member(doc, "s", ""), "s"));
    sc.epsilon = as_epsilon(member(doc, "epsilon", ""), "epsilon");
    auto check_s = [&](unsigned s, const std::string& path) {
      if (s < 1 || s > sc.n) invalid(path, "must satisfy 1 <= s <= n = " + std::to_string(sc.n));
    };
    check_s(sc.s, "s");
    if (doc.contains("sweep")) {
      const auto& sw = doc["sweep"];
      if (!sw.is_object()) invalid("sweep", "expected an object");
      reject_unknown(sw, {"s", "epsilon", "p"}, "sweep");
      if (sw.contains("s")) {
        const auto& a = as_array(sw["s"], "sweep.s");
        for (std::size_t i = 0; i < a.size(); ++i) {
          sc.sweep.s.push_back(static_cast<unsigned>(as_unsigned(a[i], at("sweep.s", i))));
          check_s(sc.sweep.s.back(), at("sweep.s", i));
        }
      }
      if (sw.contains("epsilon")) {
        const auto& a = as_array(sw["epsilon"], "sweep.epsilon");
        for (std::size_t i = 0; i < a.size(); ++i) sc.sweep.epsilon.push_back(as_epsilon(a[i], at("sweep.epsilon", i)));
      }
      if (sw.contains("p")) {
        const auto& a = as_array(sw["p"], "sweep.p");
        for (std::size_t i = 0; i < a.size(); ++i) sc.sweep.p.push_back(as_probability(a[i], at("sweep.p", i)));
      }
    }
    // Build the base source once so every validation error surfaces at load time.
    (void)build_source(*sc.source, sc.n, sc.sweep.p.empty() ? std::nullopt : std::optional<double>(sc.sweep.p.front()));
  } else {
    for (const char* key : {"family", "n", "s", "epsilon", "sweep"})
      if (doc.contains(key)) invalid(key, "given without a source section");
  }
  if (doc.contains("aep")) sc.aep = parse_aep(doc["aep"]);
  if (doc.contains("lemma")) sc.replay = parse_replay(doc["lemma"]);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::ParseError, path + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str());
  } catch (const Error& e) {
    raise(e.kind(), path + ": " + e.message());
  }
}

// ---------------------------------------------------------------------------
// Result tables.

using Cell = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

struct Table {
  std::string command;
  std::string scenario;
  std::uint64_t rng_seed = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<json> details;  // per row, JSON output only
  bool all_pass = true;
};

/// Twelve significant digits; zero has no sign.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return format_number(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string cell = format_cell(row[i]);
      if (cell.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char ch : cell) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        cell = quoted + "\"";
      }
      out += (i ? "," : "") + cell;
    }
    out += '\n';
  }
  return out;
}

/// Rounds to the twelve digits used in text output.
inline double round12(double x) { return std::isfinite(x) ? std::stod(format_number(x)) : x; }

inline json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) return std::isfinite(v) ? json(round12(v)) : json(format_number(v));
        else return v;
      },
      c);
}

inline std::string to_json(const Table& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    json row = json::object();
    for (std::size_t i = 0; i < t.columns.size(); ++i) row[t.columns[i]] = cell_json(t.rows[r][i]);
    if (r < t.details.size() && !t.details[r].is_null()) row["details"] = t.details[r];
    rows.push_back(std::move(row));
  }
  json doc = {{"schema_version", kSchemaVersion},
              {"command", t.command},
              {"scenario", t.scenario},
              {"rng", {{"algorithm", Rng::kAlgorithm}, {"seed", t.rng_seed}}},
              {"columns", t.columns},
              {"rows", std::move(rows)},
              {"pass", t.all_pass}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Privacy amplification runs.

struct ParameterPoint {
  unsigned s = 1;
  double epsilon = 0.0;
  std::optional<double> p;
};

/// Sweep points in the order p, s, epsilon (last varies fastest). Without
/// `use_sweep` only the base point is returned.
inline std::vector<ParameterPoint> parameter_points(const Scenario& sc, bool use_sweep) {
  if (!sc.source) detail::invalid("source", "missing");
  std::optional<double> base_p;
  const std::string kind = sc.source->value("kind", "");
  if (source_takes_parameter(kind) && sc.source->contains("p")) base_p = (*sc.source)["p"].get<double>();
  std::vector<std::optional<double>> ps{base_p};
  std::vector<unsigned> ss{sc.s};
  std::vector<double> es{sc.epsilon};
  if (use_sweep) {
    if (!sc.sweep.p.empty()) ps.assign(sc.sweep.p.begin(), sc.sweep.p.end());
    if (!sc.sweep.s.empty()) ss = sc.sweep.s;
    if (!sc.sweep.epsilon.empty()) es = sc.sweep.epsilon;
  }
  std::vector<ParameterPoint> out;
  for (const auto& p : ps)
    for (unsigned s : ss)
      for (double e : es) out.push_back({s, e, p});
  return out;
}

struct RunOptions {
  std::optional<std::uint64_t> cap_seeds;            // overrides the scenario
  std::optional<std::uint64_t> monte_carlo_samples;  // overrides the scenario
  bool timing = false;
};

enum class RunMode { Bound, Exact, Sweep };

/// One evaluated parameter point.
struct ResultRow {
  std::string scenario;
  ParameterPoint point;
  SecurityReport report;
  double runtime_ms = 0.0;
};

inline PaInstance build_instance(const Scenario& sc, const ParameterPoint& pt) {
  auto source = build_source(*sc.source, sc.n, sc.sweep.p.empty() ? std::nullopt : pt.p);
  return PaInstance(std::move(source), HashFamily(sc.family, sc.n, pt.s), pt.epsilon);
}

inline std::vector<ResultRow> run_scenario(const Scenario& sc, RunMode mode, const RunOptions& opts = {}) {
  const auto points = parameter_points(sc, mode == RunMode::Sweep);
  ReportOptions ro;
  ro.seed_cap = opts.cap_seeds ? *opts.cap_seeds : sc.cap_seeds.value_or(kDefaultSeedCap);
  ro.monte_carlo_samples = opts.monte_carlo_samples.value_or(sc.monte_carlo_samples.value_or(ro.monte_carlo_samples));
  ro.rng_seed = sc.rng_seed;
  ro.evaluate_distance = mode != RunMode::Bound;
  ro.require_exact = mode == RunMode::Exact;
  // Points are independent; rows come back in point order.
  return parallel_map(points.size(), [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    ResultRow row{sc.id, points[i], build_report(build_instance(sc, points[i]), ro), 0.0};
    row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return row;
  });
}

namespace detail {

/// [log2 value, log2 multiplicity] pairs, with equal adjacent values merged.
inline json spectrum_json(const Spectrum& s) {
  std::vector<SpectrumLevel> merged;
  for (const auto& l : s.levels()) {
    if (!merged.empty() && merged.back().log2_value == l.log2_value) {
      merged.back().log2_multiplicity = log2_add(merged.back().log2_multiplicity, l.log2_multiplicity);
    } else {
      merged.push_back(l);
    }
  }
  json levels = json::array();
  for (const auto& l : merged) {
    levels.push_back({l.is_zero() ? json("-inf") : json(round12(l.log2_value)), round12(l.log2_multiplicity)});
  }
  return levels;
}

inline json smoothing_json(const SmoothingResult& r) {
  return {{"value", round12(r.value)},
          {"achieved_distance", round12(r.achieved_distance)},
          {"witness_log2_levels", spectrum_json(r.witness)}};
}

template <class T>
Cell optional_cell(const std::optional<T>& v) {
  if (!v) return std::monostate{};
  return static_cast<double>(*v);
}

inline const char* averaging_name(const std::optional<SeedAveraging>& m) {
  if (!m) return "";
  return *m == SeedAveraging::SeedEnumeration ? "seeds" : "partitions";
}

inline std::vector<std::string> with_common_columns(std::vector<std::string> columns, bool timing) {
  columns.push_back("rng_algorithm");
  columns.push_back("rng_seed");
  if (timing) columns.push_back("runtime_ms");
  return columns;
}

}  // namespace detail

/// Columns of the bound, exact and sweep tables.
inline std::vector<std::string> report_columns(bool timing) {
  return detail::with_common_columns(
      {"scenario", "family", "n", "s", "epsilon", "p", "averaging", "exact_d", "sampled_d", "sampled_se", "thm1_bound",
       "cor1_bound", "key_len", "key_len_real", "rate", "thm1_pass", "cor1_pass", "key_len_pass", "pass"},
      timing);
}

inline Table report_table(const Scenario& sc, RunMode mode, const RunOptions& opts = {}) {
  Table t;
  t.command = mode == RunMode::Bound ? "bound" : mode == RunMode::Exact ? "exact" : "sweep";
  t.scenario = sc.id;
  t.rng_seed = sc.rng_seed;
  t.columns = report_columns(opts.timing);
  for (const auto& row : run_scenario(sc, mode, opts)) {
    const auto& r = row.report;
    std::vector<Cell> cells{row.scenario,
                            std::string(to_string(r.family)),
                            std::int64_t{r.input_bits},
                            std::int64_t{r.key_bits},
                            r.epsilon,
                            detail::optional_cell(row.point.p),
                            std::string(detail::averaging_name(r.averaging)),
                            detail::optional_cell(r.exact_d),
                            r.sampled_d ? Cell(r.sampled_d->mean) : Cell(),
                            r.sampled_d ? Cell(r.sampled_d->standard_error) : Cell(),
                            r.thm1_bound,
                            detail::optional_cell(r.cor1_bound),
                            r.key_length ? Cell(std::int64_t{r.key_length->length}) : Cell(),
                            r.key_length ? Cell(r.key_length->real_value) : Cell(),
                            r.rate,
                            r.thm1_holds,
                            r.cor1_holds,
                            r.key_length_ok,
                            r.pass(),
                            std::string(Rng::kAlgorithm),
                            static_cast<std::int64_t>(sc.rng_seed)};
    if (opts.timing) cells.emplace_back(row.runtime_ms);
    t.rows.push_back(std::move(cells));
    t.all_pass = t.all_pass && r.pass();

    json d = {{"collision_entropy", round12(r.collision.collision_entropy)},
              {"adversary_rank_entropy", round12(r.collision.adversary_rank_entropy)}};
    if (r.smooth) {
      d["smoothing_epsilon"] = round12(r.smooth->epsilon);
      d["smooth_min_entropy"] = detail::smoothing_json(r.smooth->smooth_min);
      d["smooth_rank_entropy"] = detail::smoothing_json(r.smooth->smooth_max_rank);
      d["key_len_bound"] = round12(r.key_length->bound_at_length);
    }
    if (r.sampled_d) d["samples"] = r.sampled_d->samples;
    t.details.push_back(std::move(d));
  }
  return t;
}

inline Table rate_table(const Scenario& sc, const RunOptions& opts = {}) {
  Table t;
  t.command = "rate";
  t.scenario = sc.id;
  t.rng_seed = sc.rng_seed;
  t.columns = detail::with_common_columns(
      {"scenario", "n", "p", "rate", "source_entropy", "adversary_entropy", "joint_entropy"}, opts.timing);
  const auto points = parameter_points(sc, true);
  // One row per distinct source parameter.
  std::vector<std::optional<double>> ps;
  for (const auto& pt : points)
    if (std::find(ps.begin(), ps.end(), pt.p) == ps.end()) ps.push_back(pt.p);
  for (const auto& p : ps) {
    const auto start = std::chrono::steady_clock::now();
    const auto source = build_source(*sc.source, sc.n, sc.sweep.p.empty() ? std::nullopt : p);
    const double joint = renyi_entropy(cq_spectrum(source), 1.0);
    const double adversary = renyi_entropy(average_spectrum(source), 1.0);
    const double h = renyi_entropy(Spectrum::from_eigenvalues(source.distribution().probs()), 1.0);
    std::vector<Cell> cells{sc.id,           std::int64_t{sc.n}, detail::optional_cell(p), joint - adversary, h,
                            adversary,       joint,              std::string(Rng::kAlgorithm),
                            static_cast<std::int64_t>(sc.rng_seed)};
    if (opts.timing)
      cells.emplace_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Smooth-entropy rates of product states.

struct AepRow {
  std::uint64_t n = 0;
  double s0_rate = 0.0;
  double sinf_rate = 0.0;
  double von_neumann = 0.0;
  double gap_s0 = 0.0;
  double gap_sinf = 0.0;
};

inline std::vector<AepRow> aep_study(const DensityOperator& rho, double epsilon, std::span<const std::uint64_t> ladder) {
  const double h = von_neumann_entropy(rho);
  return parallel_map(ladder.size(), [&](std::size_t i) {
    const auto spectrum = product_spectrum(rho, ladder[i]);
    const double n = static_cast<double>(ladder[i]);
    AepRow row;
    row.n = ladder[i];
    row.s0_rate = smooth_renyi_0(spectrum, epsilon).value / n;
    row.sinf_rate = smooth_renyi_inf(spectrum, epsilon).value / n;
    row.von_neumann = h;
    row.gap_s0 = std::abs(row.s0_rate - h);
    row.gap_sinf = std::abs(row.sinf_rate - h);
    return row;
  });
}

inline Table aep_table(const Scenario& sc, const RunOptions& opts = {}) {
  if (!sc.aep) detail::invalid("aep", "missing");
  Table t;
  t.command = "aep";
  t.scenario = sc.id;
  t.rng_seed = sc.rng_seed;
  t.columns = detail::with_common_columns(
      {"scenario", "n", "epsilon", "s0_rate", "sinf_rate", "von_neumann", "gap_s0", "gap_sinf"}, opts.timing);
  const auto start = std::chrono::steady_clock::now();
  const auto rows = aep_study(sc.aep->rho, sc.aep->epsilon, sc.aep->ladder);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  for (const auto& r : rows) {
    std::vector<Cell> cells{sc.id,     static_cast<std::int64_t>(r.n),   sc.aep->epsilon, r.s0_rate, r.sinf_rate,
                            r.von_neumann, r.gap_s0, r.gap_sinf, std::string(Rng::kAlgorithm),
                            static_cast<std::int64_t>(sc.rng_seed)};
    if (opts.timing) cells.emplace_back(ms / static_cast<double>(rows.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Property suite.

inline std::vector<std::string> property_columns(bool timing) {
  return detail::with_common_columns({"property", "trials", "passed", "worst_excess", "first_failure", "failure_lhs",
                                      "failure_rhs", "pass"},
                                     timing);
}

/// A scenario that replays one failing trial.
inline json failure_scenario(const std::string& property, std::size_t trial, std::uint64_t rng_seed, bool tampered,
                             const TrialResult& result) {
  return {{"schema_version", kSchemaVersion},
          {"id", "failure-" + property + "-" + std::to_string(trial)},
          {"rng_seed", rng_seed},
          {"lemma",
           {{"property", property},
            {"trial", trial},
            {"tampered", tampered},
            {"lhs", format_number(result.lhs)},
            {"rhs", format_number(result.rhs)}}}};
}

struct PropertyRun {
  Table table;
  std::vector<json> failures;  // replay scenarios, one per failing property
};

inline PropertyRun property_table(std::size_t trials, std::uint64_t rng_seed, std::span<const std::string> tampered = {},
                            bool timing = false) {
  PropertyRun run;
  auto& t = run.table;
  t.command = "verify-lemmas";
  t.scenario = "property-suite";
  t.rng_seed = rng_seed;
  t.columns = property_columns(timing);
  const auto& checks = property_checks();
  const auto start = std::chrono::steady_clock::now();
  const auto summaries = verify_properties(trials, rng_seed, tampered);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  for (const auto& s : summaries) {
    const auto& name = checks[s.check].name;
    std::vector<Cell> cells{name,
                            static_cast<std::int64_t>(s.trials),
                            static_cast<std::int64_t>(s.passed),
                            s.worst_excess,
                            s.first_failure ? Cell(static_cast<std::int64_t>(*s.first_failure)) : Cell(),
                            s.failure ? Cell(s.failure->lhs) : Cell(),
                            s.failure ? Cell(s.failure->rhs) : Cell(),
                            s.pass(),
                            std::string(Rng::kAlgorithm),
                            static_cast<std::int64_t>(rng_seed)};
    if (timing) cells.emplace_back(ms / static_cast<double>(summaries.size()));
    t.rows.push_back(std::move(cells));
    t.details.push_back({{"statement", checks[s.check].statement}, {"tolerance", checks[s.check].tolerance}});
    if (!s.pass()) {
      t.all_pass = false;
      const bool was_tampered = std::find(tampered.begin(), tampered.end(), name) != tampered.end();
      run.failures.push_back(failure_scenario(name, *s.first_failure, rng_seed, was_tampered, *s.failure));
    }
  }
  return run;
}

/// Re-runs the single trial named by a replay scenario, in the same columns.
inline Table replay_table(const Scenario& sc, bool timing = false) {
  if (!sc.replay) detail::invalid("lemma", "missing");
  const std::size_t idx = property_index(sc.replay->property);
  const auto& check = property_checks()[idx];
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_trial(idx, sc.rng_seed, sc.replay->trial, sc.replay->tampered);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  Table t;
  t.command = "verify-lemmas";
  t.scenario = sc.id;
  t.rng_seed = sc.rng_seed;
  t.columns = property_columns(timing);
  const double excess = check.relation == Relation::AtMost ? r.lhs - r.rhs : std::abs(r.lhs - r.rhs);
  std::vector<Cell> cells{check.name,
                          std::int64_t{1},
                          std::int64_t{r.pass ? 1 : 0},
                          excess,
                          r.pass ? Cell() : Cell(static_cast<std::int64_t>(sc.replay->trial)),
                          r.pass ? Cell() : Cell(r.lhs),
                          r.pass ? Cell() : Cell(r.rhs),
                          r.pass,
                          std::string(Rng::kAlgorithm),
                          static_cast<std::int64_t>(sc.rng_seed)};
  if (timing) cells.emplace_back(ms);
  t.rows.push_back(std::move(cells));
  t.details.push_back({{"statement", check.statement}, {"tolerance", check.tolerance}});
  t.all_pass = r.pass;
  return t;
}

}  // namespace qpa
