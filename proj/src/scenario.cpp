#include "plap/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plap/errors.hpp"
#include "plap/parallel.hpp"
#include "plap/ptrig.hpp"

namespace plap {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// config text

std::string trim(const std::string& s, size_t* lead = nullptr) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (lead) *lead = b;
  return s.substr(b, e - b);
}

struct Value {
  std::string text;
  int line = 0, col = 0;  // 1-based position of the value
};

[[noreturn]] void fail(const Value& v, const std::string& msg, int offset = 0) {
  throw ParseError("line " + std::to_string(v.line) + ", column " + std::to_string(v.col + offset) +
                       ": " + msg,
                   v.line, v.col + offset);
}

double parse_number(const Value& v, const std::string& text, int offset) {
  double out = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || ptr != e || text.empty()) fail(v, "expected a number, got '" + text + "'", offset);
  return out;
}

double as_number(const Value& v) { return parse_number(v, v.text, 0); }

int as_int(const Value& v) {
  const double d = as_number(v);
  if (d != std::floor(d) || std::abs(d) > 1e9) fail(v, "expected an integer");
  return static_cast<int>(d);
}

bool as_bool(const Value& v) {
  if (v.text == "true" || v.text == "1") return true;
  if (v.text == "false" || v.text == "0") return false;
  fail(v, "expected true or false");
}

// comma-separated items with their offsets inside the value
std::vector<std::pair<std::string, int>> split_list(const std::string& s) {
  std::vector<std::pair<std::string, int>> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      size_t lead = 0;
      std::string item = trim(s.substr(start, i - start), &lead);
      out.emplace_back(item, static_cast<int>(start + lead));
      start = i + 1;
    }
  }
  return out;
}

std::vector<double> as_list(const Value& v) {
  std::vector<double> out;
  for (const auto& [item, off] : split_list(v.text)) out.push_back(parse_number(v, item, off));
  return out;
}

// "(s, t), (s, t)"
std::vector<SupportInterval> as_blocks(const Value& v) {
  std::vector<SupportInterval> out;
  const std::string& s = v.text;
  size_t i = 0;
  auto skip = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  while (true) {
    skip();
    if (i >= s.size() || s[i] != '(') fail(v, "expected '('", static_cast<int>(i));
    const size_t close = s.find(')', i);
    if (close == std::string::npos) fail(v, "missing ')'", static_cast<int>(i));
    const std::string inner = s.substr(i + 1, close - i - 1);
    const auto items = split_list(inner);
    if (items.size() != 2) fail(v, "expected (s, t)", static_cast<int>(i));
    SupportInterval I;
    I.s = parse_number(v, items[0].first, static_cast<int>(i + 1) + items[0].second);
    I.t = parse_number(v, items[1].first, static_cast<int>(i + 1) + items[1].second);
    out.push_back(I);
    i = close + 1;
    skip();
    if (i >= s.size()) break;
    if (s[i] != ',') fail(v, "expected ','", static_cast<int>(i));
    ++i;
  }
  return out;
}

Expression compile(const Value& v, const std::string& var) {
  try {
    return Expression(v.text, var);
  } catch (const ParseError& e) {
    fail(v, e.what(), std::max(0, e.column() - 1));
  }
}

const std::set<std::string> kTopKeys = {
    "p", "potential", "potential.w", "potential.w_prime", "potential.c_minus1",
    "potential.c_zero", "potential.c_one", "potential.w_zero", "weight", "weight_samples",
    "epsilons", "epsilon", "blocks", "counts", "h0", "cells_per_eps", "profile_nodes",
    "timemap_nodes", "table_nodes", "log_margin_constant", "support_rel_tol", "support_exact",
    "tol.el_residual", "tol.neumann", "tol.junction", "tol.energy_residual", "tol.energy_error",
    "tol.uniqueness", "tol.layer_k2", "tol.profile_residual", "output_dir"};
const std::set<std::string> kSupportKeys = {"s", "t", "type"};

void apply_key(ScenarioConfig& c, const std::string& k, const Value& v) {
  if (k == "p") c.p = as_number(v);
  else if (k == "potential") {
    if (v.text != "allen_cahn" && v.text != "pendulum" && v.text != "custom")
      fail(v, "potential must be allen_cahn, pendulum or custom");
    c.potential = v.text;
  } else if (k == "potential.w") {
    compile(v, "u");
    c.custom_w = v.text;
  } else if (k == "potential.w_prime") {
    compile(v, "u");
    c.custom_w_prime = v.text;
  } else if (k == "potential.c_minus1") c.c_minus1 = as_number(v);
  else if (k == "potential.c_zero") c.c_zero = as_number(v);
  else if (k == "potential.c_one") c.c_one = as_number(v);
  else if (k == "potential.w_zero") c.w_zero = as_number(v);
  else if (k == "weight") {
    compile(v, "x");
    c.weight = v.text;
  } else if (k == "weight_samples") c.weight_samples = v.text;
  else if (k == "epsilons" || k == "epsilon") c.epsilons = as_list(v);
  else if (k == "blocks") {
    for (const auto& I : as_blocks(v)) c.support.push_back(I);
  } else if (k == "counts") {
    c.counts.clear();
    if (v.text != "auto") {
      for (const auto& [item, off] : split_list(v.text)) {
        const double d = parse_number(v, item, off);
        if (d != std::floor(d)) fail(v, "counts must be integers", off);
        c.counts.push_back(static_cast<int>(d));
      }
    }
  } else if (k == "h0") c.h0 = v.text == "auto" ? 0.0 : as_number(v);
  else if (k == "cells_per_eps") c.cells_per_eps = as_number(v);
  else if (k == "profile_nodes") c.profile_nodes = as_int(v);
  else if (k == "timemap_nodes") c.timemap_nodes = as_int(v);
  else if (k == "table_nodes") c.table_nodes = as_int(v);
  else if (k == "log_margin_constant") c.log_margin_constant = as_number(v);
  else if (k == "support_rel_tol") c.support_rel_tol = as_number(v);
  else if (k == "support_exact") c.support_exact = as_bool(v);
  else if (k == "tol.el_residual") c.tol_el = as_number(v);
  else if (k == "tol.neumann") c.tol_neumann = as_number(v);
  else if (k == "tol.junction") c.tol_junction = as_number(v);
  else if (k == "tol.energy_residual") c.tol_energy_residual = as_number(v);
  else if (k == "tol.energy_error") c.tol_energy_error = as_number(v);
  else if (k == "tol.uniqueness") c.tol_uniqueness = as_number(v);
  else if (k == "tol.layer_k2") c.tol_layer_k2 = as_number(v);
  else if (k == "tol.profile_residual") c.tol_profile = as_number(v);
  else if (k == "output_dir") c.output_dir = v.text;
}

// ---------------------------------------------------------------------------
// scenario objects

PExponent checked_p(double p) {
  if (!(p > 1.0)) throw ValidationError("p > 1", "got p = " + std::to_string(p));
  if (p < 1.1 || p > 10.0) throw ValidationError("p in [1.1, 10]", "got p = " + std::to_string(p));
  return PExponent(p);
}

DoubleWellPotential build_potential(const ScenarioConfig& c, const PExponent& P) {
  if (c.potential == "allen_cahn") return make_allen_cahn(P);
  if (c.potential == "pendulum") return make_pendulum(P);
  if (c.custom_w.empty() || c.custom_w_prime.empty())
    throw ValidationError("custom potential needs potential.w and potential.w_prime", "missing key");
  if (!(c.w_zero > 0.0)) throw ValidationError("W_0 > 0", "potential.w_zero not set");
  const Expression w(c.custom_w, "u"), wp(c.custom_w_prime, "u");
  return make_custom(P, "custom", w, wp, c.c_minus1, c.c_zero, c.c_one, c.w_zero);
}

std::vector<std::vector<double>> read_numeric_rows(const std::string& path, std::string* header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("readable input file", path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (lineno == 1 && !line.empty() &&
        (std::isalpha(static_cast<unsigned char>(trim(line)[0])))) {
      if (header) *header = line;
      continue;
    }
    std::vector<double> row;
    Value v{line, lineno, 1};
    for (const auto& [item, off] : split_list(line)) row.push_back(parse_number(v, item, off));
    rows.push_back(std::move(row));
  }
  return rows;
}

WeightFunction build_weight(const ScenarioConfig& c) {
  if (c.weight.empty() == c.weight_samples.empty())
    throw ValidationError("exactly one of weight, weight_samples", "check the config");
  if (!c.weight.empty()) return weight_from_expression(c.weight);
  fs::path path(c.weight_samples);
  if (path.is_relative()) path = fs::path(c.base_dir) / path;
  const auto rows = read_numeric_rows(path.string(), nullptr);
  Eigen::VectorXd x(rows.size()), av(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() < 2) throw ValidationError("weight samples have x,a columns", path.string());
    x[i] = rows[i][0];
    av[i] = rows[i][1];
  }
  return weight_from_samples(x, av);
}

// ---------------------------------------------------------------------------
// output

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string eps_tag(double eps) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Writer {
  fs::path dir;
  std::vector<std::pair<std::string, std::string>> files;  // name, hash

  void write(const std::string& name, const std::string& body) {
    fs::create_directories(dir);
    const fs::path tmp = dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      out << body;
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, dir / name);
    files.emplace_back(name, hex64(fnv1a64(body)));
  }
};

std::string solution_csv(const SolutionData& s, const Scenario& sc) {
  const Eigen::VectorXd w =
      s.uprime.unaryExpr([&](double d) { return phi(s.eps * d, sc.P.p()); });
  const EnergyTrace tr = energy_trace(s.eps, s.x, s.u, w, sc.a, sc.Wd);
  std::string out = "x,u,uprime,E_eps\n";
  for (Eigen::Index i = 0; i < s.x.size(); ++i) {
    out += fmt(s.x[i]) + "," + fmt(s.u[i]) + "," + fmt(s.uprime[i]) + "," + fmt(tr.e_values[i]) +
           "\n";
  }
  return out;
}

std::string junction_csv(const SolutionData& s) {
  std::string out = "j,tau_j,left_derivative,right_derivative,m_j\n";
  for (const auto& J : s.junctions) {
    out += std::to_string(J.j) + "," + fmt(J.tau) + "," + fmt(J.left) + "," + fmt(J.right) + "," +
           fmt(J.m) + "\n";
  }
  return out;
}

std::string checks_csv(const std::vector<CheckResult>& rows) {
  std::string out = "check,target,value,tol,pass\n";
  for (const auto& r : rows) {
    out += r.check + "," + fmt(r.target) + "," + fmt(r.value) + "," + fmt(r.tol) + "," +
           (r.pass ? "true" : "false") + "\n";
  }
  return out;
}

void write_manifest(Writer& W, const Scenario& sc, const std::string& sub, const RunOptions& opt,
                    const std::vector<CheckResult>& checks) {
  nlohmann::ordered_json j;
  j["tool"] = "plap";
  j["version"] = kVersion;
  j["subcommand"] = sub;
  j["config_hash"] = hex64(fnv1a64(sc.cfg.text));
  j["seed"] = opt.seed;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& [name, h] : W.files) j["files"].push_back({{"name", name}, {"fnv1a64", h}});
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& r : checks) {
    j["checks"].push_back(
        {{"check", r.check}, {"target", r.target}, {"value", r.value}, {"tol", r.tol}, {"pass", r.pass}});
  }
  W.write("manifest.json", j.dump(2) + "\n");
}

SolutionData read_solution(const fs::path& dir, double eps) {
  const std::string tag = eps_tag(eps);
  const fs::path sp = dir / ("solution_eps" + tag + ".csv");
  const fs::path jp = dir / ("junctions_eps" + tag + ".csv");
  if (!fs::exists(sp) || !fs::exists(jp))
    throw ValidationError("solution CSVs present for every epsilon", sp.string());
  SolutionData s;
  s.eps = eps;
  const auto rows = read_numeric_rows(sp.string(), nullptr);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  s.x.resize(n);
  s.u.resize(n);
  s.uprime.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rows[i].size() != 4) throw ParseError(sp.string() + ": expected 4 columns", static_cast<int>(i + 2), 1);
    s.x[i] = rows[i][0];
    s.u[i] = rows[i][1];
    s.uprime[i] = rows[i][2];
  }
  for (const auto& r : read_numeric_rows(jp.string(), nullptr)) {
    if (r.size() != 5) throw ParseError(jp.string() + ": expected 5 columns", 0, 1);
    s.junctions.push_back({static_cast<int>(r[0]), r[1], r[2], r[3], r[4]});
  }
  return s;
}

// ---------------------------------------------------------------------------
// checks

BVPSolution as_solution(const SolutionData& s, const Scenario& sc,
                        const std::vector<std::pair<double, double>>& windows,
                        const std::vector<int>& counts) {
  BVPSolution b;
  b.eps = s.eps;
  b.x_grid = s.x;
  b.u_values = s.u;
  b.uprime_values = s.uprime;
  b.w_values = s.uprime.unaryExpr([&](double d) { return phi(s.eps * d, sc.P.p()); });
  b.tau_star.windows = windows;
  b.tau_star.counts = counts;
  return b;
}

// discrete Euler-Lagrange residual recomputed from the samples, on segments
// split at the junction nodes
double el_residual(const SolutionData& s, const Scenario& sc) {
  const double p = sc.P.p(), ep = std::pow(s.eps, p);
  const Eigen::Index n = s.x.size();
  double r = 0.0;
  auto D = [&](Eigen::Index k) { return (s.u[k + 1] - s.u[k]) / (s.x[k + 1] - s.x[k]); };
  auto src = [&](Eigen::Index k) { return sc.a(s.x[k]) * sc.Wd.w_prime(s.u[k]); };
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0 && i < n - 1 && s.u[i] == 0.0) continue;  // Dirichlet node
    double g = 0.0, mu = 0.0;
    if (i == 0) {
      mu = 0.5 * (s.x[1] - s.x[0]);
      g = -ep * phi(D(0), p) + mu * src(0);
    } else if (i == n - 1) {
      mu = 0.5 * (s.x[i] - s.x[i - 1]);
      g = ep * phi(D(i - 1), p) + mu * src(i);
    } else {
      mu = 0.5 * (s.x[i + 1] - s.x[i - 1]);
      g = -ep * (phi(D(i), p) - phi(D(i - 1), p)) + mu * src(i);
    }
    r = std::max(r, std::abs(g) / mu);
  }
  return r;
}

struct LevelStats {
  double eps = 0.0;
  double el = 0.0, neumann = 0.0, junction = 0.0, energy_residual = 0.0, energy_error = 0.0;
  std::vector<int> block_zeros;
  int zeros_outside = 0;
  double uniqueness_spread = 0.0;
};

std::vector<Block> blocks_with_counts(const Scenario& sc) {
  std::vector<Block> b = sc.blocks;
  if (!sc.cfg.counts.empty())
    for (size_t i = 0; i < b.size(); ++i) b[i].count = sc.cfg.counts[i];
  return b;
}

// counts and windows from the config, independently of the stored solution
void expected_layout(const Scenario& sc, double eps, std::vector<std::pair<double, double>>& windows,
                     std::vector<int>& counts, std::vector<double>& integrals) {
  const double h0 = sc.cfg.h0 > 0.0 ? sc.cfg.h0 : detect_h0(sc.blocks, sc.a);
  SupportSpec A;
  for (const auto& b : sc.blocks) A.intervals.push_back({b.s, b.t, SupportType::kInterior});
  windows.clear();
  counts.clear();
  integrals.clear();
  for (size_t i = 0; i < sc.blocks.size(); ++i) {
    const auto& b = sc.blocks[i];
    const double I = zero_count_integral(A, sc.a, sc.table, b.s, b.t);
    integrals.push_back(I);
    counts.push_back(!sc.cfg.counts.empty() ? sc.cfg.counts[i]
                                            : std::max(1, static_cast<int>(std::lround(I / eps))));
    windows.emplace_back(b.s - h0, b.t + h0);
  }
}

// longest Dirichlet-Dirichlet piece between consecutive junctions
bool longest_dd_piece(const SolutionData& s, double& lo, double& hi) {
  if (s.junctions.size() < 2) return false;
  double best = -1.0;
  for (size_t j = 0; j + 1 < s.junctions.size(); ++j) {
    const double len = s.junctions[j + 1].tau - s.junctions[j].tau;
    if (len > best) {
      best = len;
      lo = s.junctions[j].tau;
      hi = s.junctions[j + 1].tau;
    }
  }
  return true;
}

double uniqueness_spread(const Scenario& sc, const SolutionData& s, std::uint64_t seed) {
  double lo = 0.0, hi = 1.0;
  if (!longest_dd_piece(s, lo, hi)) return 0.0;
  const double mid = 0.5 * (lo + hi);
  const Eigen::Index k = std::lower_bound(s.x.data(), s.x.data() + s.x.size(), mid) - s.x.data();
  const int sign = s.u[std::min<Eigen::Index>(k, s.x.size() - 1)] >= 0.0 ? 1 : -1;
  const int cells = std::max(64, static_cast<int>(std::ceil(sc.cfg.cells_per_eps * (hi - lo) / s.eps)));
  std::mt19937_64 rng(seed ^ fnv1a64(eps_tag(s.eps)));
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double mmin = std::numeric_limits<double>::infinity(), mmax = -mmin;
  for (int trial = 0; trial < 5; ++trial) {
    const double amp = 0.2 + 0.8 * U(rng), wob = 0.4 * (U(rng) - 0.5);
    const int mode = 1 + static_cast<int>(4 * U(rng));
    Eigen::VectorXd warm(cells + 1);
    for (int i = 0; i <= cells; ++i) {
      const double x = lo + (hi - lo) * i / cells;
      const double d = std::min(x - lo, hi - x) / s.eps;
      double v = amp * (1.0 - std::exp(-d)) * (1.0 + wob * std::sin(mode * M_PI * i / cells));
      warm[i] = sign * std::clamp(v, 0.0, 1.0);
    }
    const PieceMinimizer pm = minimize_piece(s.eps, lo, hi, sign, BoundaryKind::kDirichletDirichlet,
                                             sc.a, sc.Wd, cells, &warm);
    mmin = std::min(mmin, pm.m_value);
    mmax = std::max(mmax, pm.m_value);
  }
  return mmax - mmin;
}

double max_ratio(const std::vector<double>& v, size_t from) {
  double r = 0.0;
  for (size_t i = std::max<size_t>(from, 1); i < v.size(); ++i)
    r = std::max(r, v[i] / std::max(v[i - 1], 1e-300));
  return r;
}

std::string level_name(const std::string& check, double eps) {
  return check + "[eps=" + eps_tag(eps) + "]";
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
  ScenarioConfig c;
  c.text = text;
  c.base_dir = base_dir;
  std::set<std::string> seen;
  bool have_blocks = false, have_support = false;

  struct Section {
    int line = 0;
    std::map<std::string, Value> kv;
  };
  std::optional<Section> sec;
  auto close_section = [&] {
    if (!sec) return;
    SupportInterval I;
    auto get = [&](const std::string& k) -> const Value* {
      auto it = sec->kv.find(k);
      return it == sec->kv.end() ? nullptr : &it->second;
    };
    if (const Value* v = get("type")) {
      if (v->text == "interior") I.type = SupportType::kInterior;
      else if (v->text == "right_end") I.type = SupportType::kRightEnd;
      else if (v->text == "left_end") I.type = SupportType::kLeftEnd;
      else fail(*v, "type must be interior, right_end or left_end");
    }
    const Value* s = get("s");
    const Value* t = get("t");
    const bool need_s = I.type != SupportType::kLeftEnd, need_t = I.type != SupportType::kRightEnd;
    if ((need_s && !s) || (need_t && !t))
      throw ParseError("line " + std::to_string(sec->line) + ", column 1: [support] needs s and t",
                       sec->line, 1);
    I.s = s ? as_number(*s) : 0.0;
    I.t = t ? as_number(*t) : 1.0;
    c.support.push_back(I);
    sec.reset();
  };

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    size_t lead = 0;
    const std::string line = trim(raw, &lead);
    if (line.empty()) continue;
    const int col0 = static_cast<int>(lead) + 1;
    if (line.front() == '[') {
      if (line != "[support]")
        throw ParseError("line " + std::to_string(lineno) + ", column " + std::to_string(col0) +
                             ": unknown section " + line,
                         lineno, col0);
      close_section();
      sec = Section{lineno, {}};
      have_support = true;
      continue;
    }
    const size_t eq = raw.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ", column " + std::to_string(col0) +
                           ": expected key = value",
                       lineno, col0);
    const std::string key = trim(raw.substr(0, eq));
    size_t vlead = 0;
    Value v;
    v.text = trim(raw.substr(eq + 1), &vlead);
    v.line = lineno;
    v.col = static_cast<int>(eq + 1 + vlead) + 1;
    if (v.text.empty()) fail(v, "missing value for '" + key + "'");
    Value kpos{key, lineno, col0};
    if (sec) {
      if (!kSupportKeys.count(key)) fail(kpos, "unknown key '" + key + "' in [support]");
      if (sec->kv.count(key)) fail(kpos, "duplicate key '" + key + "'");
      sec->kv[key] = v;
      continue;
    }
    if (!kTopKeys.count(key)) fail(kpos, "unknown key '" + key + "'");
    const std::string canon = key == "epsilon" ? "epsilons" : key;
    if (seen.count(canon)) fail(kpos, "duplicate key '" + key + "'");
    seen.insert(canon);
    if (key == "blocks") have_blocks = true;
    apply_key(c, key, v);
  }
  close_section();
  if (have_blocks && have_support)
    throw ParseError("line 1, column 1: blocks and [support] sections are exclusive", 1, 1);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("readable config file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  const fs::path parent = fs::path(path).parent_path();
  return parse_config(ss.str(), parent.empty() ? "." : parent.string());
}

Scenario::Scenario(const ScenarioConfig& c)
    : cfg(c), P(checked_p(c.p)), Wd(build_potential(c, P)), a(build_weight(c)) {
  validate_potential(Wd);
  validate_weight(a);
  if (cfg.table_nodes < 16) throw ValidationError("table_nodes >= 16", std::to_string(cfg.table_nodes));
  if (cfg.timemap_nodes < 2) throw ValidationError("timemap_nodes >= 2", std::to_string(cfg.timemap_nodes));
  if (cfg.profile_nodes < 3) throw ValidationError("profile_nodes >= 3", std::to_string(cfg.profile_nodes));
  if (!(cfg.cells_per_eps >= 8.0)) throw ValidationError("cells_per_eps >= 8", fmt(cfg.cells_per_eps));
  for (double e : cfg.epsilons)
    if (!(e > 0.0)) throw ValidationError("eps > 0", fmt(e));
  table = TimeMapTable(Wd, 1.0, TableGrid{cfg.table_nodes});
  A.intervals = cfg.support;
  A.rel_tol = cfg.support_rel_tol;
  A.exact_match = cfg.support_exact;
  if (!A.intervals.empty()) validate_support(A, a);
  for (const auto& I : A.intervals)
    if (I.type == SupportType::kInterior) blocks.push_back({I.s, I.t, 0});
  if (!cfg.counts.empty() && cfg.counts.size() != blocks.size())
    throw ValidationError("one count per interior support component",
                          std::to_string(cfg.counts.size()) + " counts, " +
                              std::to_string(blocks.size()) + " components");
  for (int n : cfg.counts)
    if (n < 1) throw ValidationError("counts >= 1", std::to_string(n));
}

SolutionData solution_data(const BVPSolution& sol) {
  SolutionData s;
  s.eps = sol.eps;
  s.x = sol.x_grid;
  s.u = sol.u_values;
  s.uprime = sol.uprime_values;
  for (size_t j = 1; j < sol.pieces.size(); ++j) {
    s.junctions.push_back({static_cast<int>(j), sol.pieces[j].s, sol.pieces[j - 1].d_right,
                           sol.pieces[j].d_left, sol.pieces[j - 1].m_value});
  }
  s.windows = sol.tau_star.windows;
  s.counts = sol.tau_star.counts;
  return s;
}

std::vector<CheckResult> verify_solutions(const Scenario& sc, const std::vector<SolutionData>& in,
                                          std::uint64_t seed) {
  if (in.empty()) throw ValidationError("at least one solution", "nothing to verify");
  if (sc.blocks.empty()) throw ValidationError("interior support components", "none configured");
  std::vector<SolutionData> sols = in;
  std::sort(sols.begin(), sols.end(), [](const auto& l, const auto& r) { return l.eps > r.eps; });
  const auto& cfg = sc.cfg;
  const double W0 = sc.Wd.w_zero();
  const EnergyProfile E = construct_profile(sc.A, sc.a, sc.table, ProfileGrid{cfg.profile_nodes});

  std::vector<CheckResult> out;
  std::vector<LevelStats> stats(sols.size());
  std::vector<BVPSolution> sweep(sols.size());
  std::vector<int> all_counts;
  for (size_t l = 0; l < sols.size(); ++l) {
    const SolutionData& s = sols[l];
    LevelStats& st = stats[l];
    st.eps = s.eps;
    std::vector<std::pair<double, double>> windows;
    std::vector<int> counts;
    std::vector<double> integrals;
    expected_layout(sc, s.eps, windows, counts, integrals);
    sweep[l] = as_solution(s, sc, windows, counts);

    st.el = el_residual(s, sc);
    st.neumann = std::max(std::abs(s.uprime[0]), std::abs(s.uprime[s.uprime.size() - 1]));
    for (const auto& J : s.junctions)
      st.junction = std::max(st.junction, std::abs(std::abs(J.left) - std::abs(J.right)));
    const BVPSolution& b = sweep[l];
    const EnergyTrace tr = energy_trace(s.eps, b.x_grid, b.u_values, b.w_values, sc.a, sc.Wd);
    st.energy_residual = tr.max_residual;
    for (Eigen::Index i = 0; i < s.x.size(); ++i)
      st.energy_error = std::max(st.energy_error,
                                 std::abs(tr.e_values[i] - profile_value(sc.A, sc.a, sc.table, s.x[i])));

    const Eigen::VectorXd z = solution_zeros(b);
    st.block_zeros.assign(windows.size(), 0);
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      bool inside = false;
      for (size_t i = 0; i < windows.size(); ++i) {
        if (z[k] > windows[i].first && z[k] < windows[i].second) {
          ++st.block_zeros[i];
          inside = true;
        }
      }
      if (!inside) ++st.zeros_outside;
    }
    st.uniqueness_spread = uniqueness_spread(sc, s, seed);

    out.push_back({level_name("el_residual", s.eps), 0.0, st.el, cfg.tol_el, st.el < cfg.tol_el});
    out.push_back({level_name("neumann", s.eps), 0.0, st.neumann, cfg.tol_neumann,
                   st.neumann < cfg.tol_neumann});
    out.push_back({level_name("junction_matching", s.eps), 0.0, st.junction, cfg.tol_junction,
                   st.junction < cfg.tol_junction});
    out.push_back({level_name("energy_residual", s.eps), 0.0, st.energy_residual,
                   cfg.tol_energy_residual, st.energy_residual < cfg.tol_energy_residual});
    for (size_t i = 0; i < windows.size(); ++i) {
      out.push_back({level_name("zero_count_block" + std::to_string(i + 1), s.eps),
                     static_cast<double>(counts[i]), static_cast<double>(st.block_zeros[i]), 0.0,
                     st.block_zeros[i] == counts[i]});
    }
    out.push_back({level_name("zeros_outside_windows", s.eps), 0.0,
                   static_cast<double>(st.zeros_outside), 0.0, st.zeros_outside == 0});
    out.push_back({level_name("uniqueness", s.eps), 0.0, st.uniqueness_spread, cfg.tol_uniqueness,
                   st.uniqueness_spread <= cfg.tol_uniqueness});
  }

  const LevelStats& last = stats.back();
  const double etol = cfg.tol_energy_error * W0;
  out.push_back({level_name("energy_error_final", last.eps), 0.0, last.energy_error, etol,
                 last.energy_error < etol});
  if (sols.size() >= 2) {
    std::vector<double> ee;
    for (const auto& st : stats) ee.push_back(st.energy_error);
    const double r = max_ratio(ee, 1);
    out.push_back({"energy_error_decreasing", 0.0, r, 1.0, r < 1.0});

    const ZeroCountReport zr = zero_count_report(sweep, E, sc.a, sc.table);
    std::vector<double> rel;
    for (const auto& lv : zr.levels) rel.push_back(lv.rel_error);
    const int k = std::min<int>(3, static_cast<int>(rel.size()));
    const double rz = max_ratio(rel, rel.size() - k + 1);
    out.push_back({"zero_rel_error_decreasing", 0.0, rz, 1.0, zr.decreasing_last(k)});

    const AccumulationReport ar = accumulation_report(sweep, E, sc.a, sc.table);
    std::vector<double> ds, dz;
    for (const auto& lv : ar.levels) {
      ds.push_back(lv.support_to_zeros);
      dz.push_back(lv.zeros_to_set);
    }
    out.push_back({"support_distance_shrinks", 0.0, max_ratio(ds, 1), 1.0, ar.support_distance_shrinks()});
    double worst = 0.0;
    for (size_t i = 1; i < dz.size(); ++i) worst = std::max(worst, dz[i] - dz[i - 1]);
    out.push_back({"zero_distance_nonincreasing", 0.0, worst, 0.0, ar.zero_distance_shrinks()});

    // decay rate on the longest Dirichlet piece of the two finest levels
    const SolutionData& s1 = sols[sols.size() - 2];
    const SolutionData& s2 = sols.back();
    double lo1 = 0.0, hi1 = 1.0, lo2 = 0.0, hi2 = 1.0;
    if (longest_dd_piece(s1, lo1, hi1) && longest_dd_piece(s2, lo2, hi2)) {
      const LayerDecayFit f1 = layer_decay_check(s1.eps, s1.x, s1.u, s1.uprime, {{lo1, hi1}});
      const LayerDecayFit f2 = layer_decay_check(s2.eps, s2.x, s2.u, s2.uprime, {{lo2, hi2}});
      const double dev = std::abs(f2.K2 / f1.K2 - 1.0);
      out.push_back({"layer_k2_stable", 0.0, dev, cfg.tol_layer_k2,
                     f1.K2 > 0.0 && f2.K2 > 0.0 && dev <= cfg.tol_layer_k2});
    }
  }
  return out;
}

void run(const std::string& sub, const Scenario& sc, const RunOptions& opt, std::ostream& log) {
  const auto& cfg = sc.cfg;
  Writer W;
  W.dir = opt.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out_dir);
  if (W.dir.is_relative() && opt.out_dir.empty()) W.dir = fs::path(cfg.base_dir) / W.dir;
  std::vector<CheckResult> checks;

  auto need_blocks = [&] {
    if (sc.blocks.empty() || sc.blocks.size() != sc.A.intervals.size())
      throw ValidationError("solve requires interior support components only",
                            std::to_string(sc.A.intervals.size()) + " components");
    if (cfg.epsilons.empty()) throw ValidationError("epsilons given", "empty list");
  };
  auto solve_one = [&](double eps, unsigned jobs) {
    PartitionOptions po;
    po.cells_per_eps = cfg.cells_per_eps;
    po.h0 = cfg.h0;
    po.jobs = jobs;
    return maximize_partition(eps, blocks_with_counts(sc), sc.a, sc.Wd, sc.table, po).second;
  };

  if (sub == "timemap") {
    const double W0 = sc.Wd.w_zero(), delta = 1e-10;
    const double smax = std::log((1.0 - delta) / delta);
    const int n = cfg.timemap_nodes;
    std::vector<std::string> rows(n);
    parallel_for(
        n,
        [&](long k) {
          const double sg = -smax + 2.0 * smax * k / (n - 1);
          const double xi = W0 / (1.0 + std::exp(-sg));
          const auto [T, K] = time_and_kinetic(xi, 1.0, sc.Wd);
          rows[k] = fmt(xi) + "," + fmt(T) + "," + fmt(K) + "," + fmt(sc.table.G(xi)) + "\n";
        },
        opt.jobs);
    std::string body = "xi,T,K,G\n";
    for (const auto& r : rows) body += r;
    W.write("timemap.csv", body);
    log << "timemap: " << n << " rows\n";
  } else if (sub == "profile") {
    if (sc.A.intervals.empty()) throw ValidationError("support has a component", "no [support]");
    const EnergyProfile E = construct_profile(sc.A, sc.a, sc.table, ProfileGrid{cfg.profile_nodes});
    const Eigen::VectorXd r = profile_residuals(E, sc.a, sc.table);
    std::string body = "x,E,residual\n";
    for (Eigen::Index i = 0; i < E.x_grid.size(); ++i)
      body += fmt(E.x_grid[i]) + "," + fmt(E.e_values[i]) + "," + fmt(r[i]) + "\n";
    W.write("profile.csv", body);
    const double rmax = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    checks.push_back({"profile_residual", 0.0, rmax, cfg.tol_profile, rmax < cfg.tol_profile});
    log << "profile: " << E.x_grid.size() << " nodes, max residual " << fmt(rmax) << "\n";
  } else if (sub == "solve" || sub == "sweep") {
    need_blocks();
    const size_t L = cfg.epsilons.size();
    std::vector<SolutionData> sols(L);
    if (sub == "solve") {
      for (size_t l = 0; l < L; ++l) {
        sols[l] = solution_data(solve_one(cfg.epsilons[l], opt.jobs));
        log << "solve: eps=" << eps_tag(cfg.epsilons[l]) << " junctions=" << sols[l].junctions.size()
            << "\n";
      }
    } else {
      parallel_for(
          static_cast<long>(L),
          [&](long l) { sols[l] = solution_data(solve_one(cfg.epsilons[l], 1)); }, opt.jobs);
    }
    for (const auto& s : sols) {
      W.write("solution_eps" + eps_tag(s.eps) + ".csv", solution_csv(s, sc));
      W.write("junctions_eps" + eps_tag(s.eps) + ".csv", junction_csv(s));
    }
    if (sub == "sweep") {
      // round trip through the written files so verify sees exactly the CSVs
      std::vector<SolutionData> back;
      for (double e : cfg.epsilons) back.push_back(read_solution(W.dir, e));
      checks = verify_solutions(sc, back, opt.seed);
      std::vector<SolutionData> sorted = back;
      std::sort(sorted.begin(), sorted.end(), [](const auto& l, const auto& r) { return l.eps > r.eps; });
      std::vector<BVPSolution> sweep;
      for (const auto& s : sorted) {
        std::vector<std::pair<double, double>> windows;
        std::vector<int> counts;
        std::vector<double> integrals;
        expected_layout(sc, s.eps, windows, counts, integrals);
        sweep.push_back(as_solution(s, sc, windows, counts));
      }
      const EnergyProfile E = construct_profile(sc.A, sc.a, sc.table, ProfileGrid{cfg.profile_nodes});
      const ZeroCountReport zr = zero_count_report(sweep, E, sc.a, sc.table);
      const AccumulationReport ar = accumulation_report(sweep, E, sc.a, sc.table);
      std::string body =
          "eps,zeros,eps_z,zero_integral,zero_rel_error,energy_error,energy_residual,el_residual,"
          "neumann,junction_mismatch,support_distance,zero_distance\n";
      for (size_t l = 0; l < sweep.size(); ++l) {
        auto val = [&](const std::string& name) {
          for (const auto& r : checks)
            if (r.check == level_name(name, sorted[l].eps)) return r.value;
          return std::numeric_limits<double>::quiet_NaN();
        };
        const BVPSolution& b = sweep[l];
        double eerr = 0.0;
        const EnergyTrace tr = energy_trace(b.eps, b.x_grid, b.u_values, b.w_values, sc.a, sc.Wd);
        for (Eigen::Index i = 0; i < b.x_grid.size(); ++i)
          eerr = std::max(eerr, std::abs(tr.e_values[i] -
                                         profile_value(sc.A, sc.a, sc.table, b.x_grid[i])));
        body += fmt(b.eps) + "," + std::to_string(zr.levels[l].zeros) + "," +
                fmt(zr.levels[l].eps_z) + "," + fmt(zr.integral) + "," +
                fmt(zr.levels[l].rel_error) + "," + fmt(eerr) + "," + fmt(val("energy_residual")) +
                "," + fmt(val("el_residual")) + "," + fmt(val("neumann")) + "," +
                fmt(val("junction_matching")) + "," + fmt(ar.levels[l].support_to_zeros) + "," +
                fmt(ar.levels[l].zeros_to_set) + "\n";
      }
      W.write("summary.csv", body);
      W.write("verify.csv", checks_csv(checks));
    }
    log << sub << ": " << L << " level(s) written to " << W.dir.string() << "\n";
  } else if (sub == "verify") {
    need_blocks();
    std::vector<SolutionData> sols;
    for (double e : cfg.epsilons) sols.push_back(read_solution(W.dir, e));
    checks = verify_solutions(sc, sols, opt.seed);
    W.write("verify.csv", checks_csv(checks));
  } else {
    throw ValidationError("subcommand in {timemap, profile, solve, verify, sweep}", sub);
  }

  int failed = 0;
  for (const auto& r : checks) {
    if (!r.pass) ++failed;
    if (sub == "verify" || sub == "sweep")
      log << (r.pass ? "PASS " : "FAIL ") << r.check << " value=" << fmt(r.value)
          << " tol=" << fmt(r.tol) << "\n";
  }
  if (!checks.empty()) log << failed << " of " << checks.size() << " checks failed\n";
  write_manifest(W, sc, sub, opt, checks);
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    err << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const ConstructionError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (...) {
    err << "error: unknown failure\n";
    return 1;
  }
}

}  // namespace plap
