#include "cplab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cplab/coupling.hpp"
#include "cplab/cylinder.hpp"
#include "cplab/discretization.hpp"
#include "cplab/estimation.hpp"
#include "cplab/json_io.hpp"
#include "cplab/occupancy.hpp"
#include "cplab/parallel.hpp"
#include "cplab/percolation.hpp"
#include "cplab/rng.hpp"
#include "cplab/stats.hpp"
#include "cplab/tail_fit.hpp"

namespace cplab {

using nlohmann::json;

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kKindNames = {
    {ExperimentKind::tail, "tail"},
    {ExperimentKind::crossing, "crossing"},
    {ExperimentKind::finite_size, "finite_size"},
    {ExperimentKind::mixing, "mixing"},
    {ExperimentKind::influence, "influence"},
    {ExperimentKind::threshold_window, "threshold_window"},
    {ExperimentKind::sandwich, "sandwich"},
    {ExperimentKind::coupling_audit, "coupling_audit"},
    {ExperimentKind::sweep, "sweep"},
};

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (name == s) return kind;
  throw ConfigError("unknown experiment '" + s + "'");
}

// ---------------------------------------------------------------- config

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = boost::algorithm::trim_copy(raw);
  std::size_t used = 0;
  T v{};
  try {
    if constexpr (std::is_same_v<T, double>)
      v = std::stod(s, &used);
    else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      v = static_cast<T>(std::stoull(s, &used));
    } else
      v = static_cast<T>(std::stoll(s, &used));
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": '" + raw + "'");
  }
  if (used != s.size()) throw ConfigError("bad value for " + key + ": '" + raw + "'");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, raw, boost::algorithm::is_any_of(","));
  std::vector<T> out;
  for (const auto& p : parts) out.push_back(parse_number<T>(key, p));
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(raw));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + raw + "'");
}

std::string trimmed(const std::string& s) { return boost::algorithm::trim_copy(s); }

const std::set<std::string> kKeys = {
    "experiment", "seed", "replicas", "threads", "level", "output", "trace",
    "geometry.n",
    "params.mode", "params.values", "params.q_prime",
    "discretization.alpha", "discretization.delta", "discretization.delta1", "discretization.rule",
    "coupling.beta_prime",
    "event.kind",
    "tail.floor", "tail.field",
    "finite_size.eps_hat",
    "window.eps",
    "mixing.k", "mixing.deep_scale",
    "influence.per_member",
};

void set_key(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "experiment") c.experiment = parse_experiment_kind(trimmed(v));
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "replicas") c.replicas = parse_number<std::size_t>(key, v);
  else if (key == "threads") c.threads = parse_number<int>(key, v);
  else if (key == "level") c.level = parse_number<double>(key, v);
  else if (key == "output") c.output = trimmed(v);
  else if (key == "trace") c.trace = parse_bool(key, v);
  else if (key == "geometry.n") c.n = parse_list<int>(key, v);
  else if (key == "params.mode") {
    const std::string m = trimmed(v);
    if (m == "q") c.mode = RateMode::q;
    else if (m == "lambda") c.mode = RateMode::lambda;
    else throw ConfigError("params.mode must be q or lambda");
  } else if (key == "params.values") c.values = parse_list<double>(key, v);
  else if (key == "params.q_prime") c.q_prime = parse_number<double>(key, v);
  else if (key == "discretization.alpha") c.alpha = parse_number<double>(key, v);
  else if (key == "discretization.delta") c.delta = parse_number<double>(key, v);
  else if (key == "discretization.delta1") c.delta1 = parse_number<double>(key, v);
  else if (key == "discretization.rule") c.rule = trimmed(v);
  else if (key == "coupling.beta_prime") c.beta_prime = parse_number<double>(key, v);
  else if (key == "event.kind") c.event = trimmed(v);
  else if (key == "tail.floor") c.tail_floor = parse_number<long long>(key, v);
  else if (key == "tail.field") c.tail_field = trimmed(v);
  else if (key == "finite_size.eps_hat") c.eps_hat = parse_number<double>(key, v);
  else if (key == "window.eps") c.window_eps = parse_number<double>(key, v);
  else if (key == "mixing.k") c.mixing_k = parse_number<int>(key, v);
  else if (key == "mixing.deep_scale") c.deep_scale = parse_number<int>(key, v);
  else if (key == "influence.per_member") c.per_member = parse_bool(key, v);
}

double delta_at(const ExperimentConfig& c, int n) {
  return c.delta ? *c.delta : delta_for_scale(n, c.alpha);
}

double delta1_at(const ExperimentConfig& c, int n) {
  return c.delta1 ? *c.delta1 : delta1_for_scale(n, c.alpha);
}

GuardRule guard_rule(const ExperimentConfig& c) {
  return c.rule == "tight" ? GuardRule::tight() : GuardRule::guard_band();
}

RateParams rates(const ExperimentConfig& c, double value) {
  return c.mode == RateMode::q ? RateParams::from_q(value) : RateParams::from_lambda(value);
}

bool uses_q_only(ExperimentKind k) {
  return k == ExperimentKind::influence || k == ExperimentKind::threshold_window ||
         k == ExperimentKind::coupling_audit;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (n.empty()) fail("geometry.n is empty");
  for (int v : n)
    if (v < 2 || v > 4096) fail("geometry.n values must lie in [2, 4096]");
  if (values.empty()) fail("params.values is empty");
  for (double v : values) {
    if (mode == RateMode::q && !(v > 0.0 && v < 1.0)) fail("q values must lie in (0, 1)");
    if (mode == RateMode::lambda && !(v > 0.0 && std::isfinite(v))) fail("lambda values must be positive");
  }
  if (!(alpha > 0.0 && alpha < 2.0)) fail("discretization.alpha must lie in (0, 2)");
  if (delta && !(*delta > 0.0)) fail("discretization.delta must be positive");
  if (delta1 && !(*delta1 > 0.0)) fail("discretization.delta1 must be positive");
  if (rule != "guard" && rule != "tight") fail("discretization.rule must be guard or tight");
  if (replicas < 1) fail("replicas must be positive");
  if (!(level > 0.0 && level < 1.0)) fail("level must lie in (0, 1)");
  if (threads < 1 || threads > 256) fail("threads must lie in [1, 256]");
  if (output.empty()) fail("output is empty");
  if (event != "horizontal" && event != "vertical" && event != "cylinder")
    fail("event.kind must be horizontal, vertical or cylinder");
  if (tail_floor < 1) fail("tail.floor must be >= 1");
  if (tail_field != "b_interior" && tail_field != "l") fail("tail.field must be b_interior or l");
  if (!(eps_hat > 0.0 && eps_hat < 0.5)) fail("finite_size.eps_hat must lie in (0, 1/2)");
  if (!(window_eps > 0.0 && window_eps < 0.5)) fail("window.eps must lie in (0, 1/2)");
  if (mixing_k < 1 || mixing_k > 8) fail("mixing.k must lie in [1, 8]");
  if (deep_scale < 0) fail("mixing.deep_scale must be >= 0");
  if (beta_prime && !(*beta_prime >= 0.0)) fail("coupling.beta_prime must be >= 0");

  if (uses_q_only(experiment) && mode != RateMode::q) fail(to_string(experiment) + " needs params.mode = q");
  switch (experiment) {
    case ExperimentKind::tail:
      break;
    case ExperimentKind::crossing:
    case ExperimentKind::finite_size:
    case ExperimentKind::sandwich:
      if (replicas < 30) fail("at least 30 replicas required");
      break;
    case ExperimentKind::sweep:
      if (replicas < 30) fail("at least 30 replicas required");
      if (values.size() * n.size() < 2) fail("sweep needs at least two grid points");
      break;
    case ExperimentKind::mixing:
      if (replicas < 30) fail("at least 30 replicas required");
      if (event == "cylinder") fail("mixing events are horizontal or vertical crossings");
      for (int v : n)
        if (deep_scale != 0 && deep_scale < v) fail("mixing.deep_scale must be 0 or >= n");
      break;
    case ExperimentKind::influence:
      if (replicas < 1000) fail("influence needs at least 1000 replicas");
      break;
    case ExperimentKind::threshold_window:
      if (replicas < 30) fail("at least 30 replicas required");
      if (values.size() < 5) fail("threshold_window needs at least 5 grid values");
      for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1])) fail("threshold_window grid must be strictly increasing");
      break;
    case ExperimentKind::coupling_audit:
      if (!(q_prime > 0.0 && q_prime < 1.0)) fail("params.q_prime must lie in (0, 1)");
      for (double v : values)
        if (v > q_prime) fail("coupling needs q <= q_prime");
      for (int v : n)
        if (delta_at(*this, v) > delta1_at(*this, v)) fail("coupling needs delta <= delta1");
      break;
  }
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (!kKeys.count(name)) throw ConfigError("unknown key '" + name + "'");
      set_key(c, name, node.data());
      continue;
    }
    for (const auto& [sub, leaf] : node) {
      const std::string key = name + "." + sub;
      if (!kKeys.count(key)) throw ConfigError("unknown key '" + key + "'");
      set_key(c, key, leaf.data());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return parse_config(text);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["seed"] = c.seed;
  j["replicas"] = c.replicas;
  j["threads"] = c.threads;
  j["level"] = c.level;
  j["output"] = c.output;
  j["trace"] = c.trace;
  j["geometry"] = {{"n", c.n}};
  j["params"] = {{"mode", to_string(c.mode)}, {"values", c.values}, {"q_prime", c.q_prime}};
  j["discretization"] = {{"alpha", c.alpha},
                         {"delta", c.delta ? json(*c.delta) : json(nullptr)},
                         {"delta1", c.delta1 ? json(*c.delta1) : json(nullptr)},
                         {"rule", c.rule}};
  j["coupling"] = {{"beta_prime", c.beta_prime ? json(*c.beta_prime) : json("default")}};
  j["event"] = {{"kind", c.event}};
  j["tail"] = {{"floor", c.tail_floor}, {"field", c.tail_field}};
  j["finite_size"] = {{"eps_hat", c.eps_hat}};
  j["window"] = {{"eps", c.window_eps}};
  j["mixing"] = {{"k", c.mixing_k}, {"deep_scale", c.deep_scale}};
  j["influence"] = {{"per_member", c.per_member}};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.experiment = parse_experiment_kind(j.at("experiment").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.replicas = j.at("replicas").get<std::size_t>();
    c.threads = j.value("threads", 1);
    c.level = j.at("level").get<double>();
    c.output = j.value("output", std::string("result"));
    c.trace = j.value("trace", false);
    c.n = j.at("geometry").at("n").get<std::vector<int>>();
    const auto& p = j.at("params");
    const std::string mode = p.at("mode").get<std::string>();
    if (mode != "q" && mode != "lambda") throw ConfigError("params.mode must be q or lambda");
    c.mode = mode == "q" ? RateMode::q : RateMode::lambda;
    c.values = p.at("values").get<std::vector<double>>();
    c.q_prime = p.at("q_prime").get<double>();
    const auto& d = j.at("discretization");
    c.alpha = d.at("alpha").get<double>();
    if (!d.at("delta").is_null()) c.delta = d.at("delta").get<double>();
    if (!d.at("delta1").is_null()) c.delta1 = d.at("delta1").get<double>();
    c.rule = d.at("rule").get<std::string>();
    const auto& bp = j.at("coupling").at("beta_prime");
    if (bp.is_number()) c.beta_prime = bp.get<double>();
    c.event = j.at("event").at("kind").get<std::string>();
    c.tail_floor = j.at("tail").at("floor").get<long long>();
    c.tail_field = j.at("tail").at("field").get<std::string>();
    c.eps_hat = j.at("finite_size").at("eps_hat").get<double>();
    c.window_eps = j.at("window").at("eps").get<double>();
    c.mixing_k = j.at("mixing").at("k").get<int>();
    c.deep_scale = j.at("mixing").at("deep_scale").get<int>();
    c.per_member = j.at("influence").at("per_member").get<bool>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("incomplete embedded config: ") + e.what());
  }
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output");
  j.erase("threads");
  j.erase("trace");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- runs

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json estimate_json(const BinomialEstimate& e) {
  return {{"successes", e.successes}, {"trials", e.trials}, {"estimate", e.estimate},
          {"stderr", e.stderr_},      {"lo", e.lo},         {"hi", e.hi}};
}

json fit_json(const TailFit& f) {
  return {{"model", to_string(f.model)},
          {"rate_or_exponent", std::isfinite(f.rate_or_exponent) ? json(f.rate_or_exponent) : json("inf")},
          {"tail_floor", f.tail_floor},
          {"log_likelihood", f.goodness},
          {"n_tail", f.n_tail},
          {"degenerate", f.degenerate}};
}

EventSpec event_spec(const ExperimentConfig& c, int n) {
  if (c.event == "vertical") return vertical_3n_n(n);
  if (c.event == "cylinder") return {EventKind::cylinder, {}};
  return horizontal_3n_n(n);
}

struct Context {
  const ExperimentConfig& c;
  RunResult& out;
  std::ostringstream csv;

  void trace(json j) {
    if (c.trace) out.trace.push_back(j.dump());
  }
  void violation(json j) { out.violations.push_back(std::move(j)); }
};

// Seed of grid point (n, value index).
std::uint64_t point_seed(const ExperimentConfig& c, int n, std::size_t vi) {
  return derive_key(c.seed, static_cast<std::uint64_t>(n), vi);
}

json run_tail(Context& ctx) {
  const auto& c = ctx.c;
  ctx.csv << "n,param,size,count\n";
  json points = json::array();
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    const Rect box = c.tail_field == "l" ? g.box_L : g.box_B.grown(-floor_sqrt(n));
    for (std::size_t vi = 0; vi < c.values.size(); ++vi) {
      const RateParams p = rates(c, c.values[vi]);
      const std::uint64_t seed = point_seed(c, n, vi);
      std::vector<std::vector<long long>> per(c.replicas);
      parallel_for(c.replicas, c.threads, [&](std::size_t i) {
        per[i] = extract_clusters(sample_occupancy_field(g, p, derive_key(seed, i), box)).sizes;
      });
      std::vector<long long> sizes;
      for (std::size_t i = 0; i < per.size(); ++i) {
        sizes.insert(sizes.end(), per[i].begin(), per[i].end());
        const long long mx = per[i].empty() ? 0 : *std::max_element(per[i].begin(), per[i].end());
        ctx.trace({{"n", n}, {"param", c.values[vi]}, {"replica", i}, {"clusters", per[i].size()},
                   {"max_size", mx}});
      }
      std::map<long long, std::size_t> hist;
      for (long long s : sizes) ++hist[s];
      for (const auto& [s, k] : hist) ctx.csv << n << ',' << num(c.values[vi]) << ',' << s << ',' << k << '\n';
      json pt = {{"n", n}, {"param", c.values[vi]}, {"field", to_json(box)}, {"clusters", sizes.size()}};
      try {
        const TailFitPair f = fit_tail(sizes, c.tail_floor);
        pt["exponential"] = fit_json(f.exponential);
        pt["power_law"] = fit_json(f.power_law);
        pt["preferred"] = f.exponential.goodness >= f.power_law.goodness ? "exponential" : "power_law";
      } catch (const InsufficientTailData& e) {
        pt["insufficient_tail_data"] = {{"have", e.have()}, {"need", kMinTailCount}};
      }
      points.push_back(pt);
    }
  }
  return {{"points", points}};
}

// Estimates over the grid, shared by crossing and sweep.
json run_crossing(Context& ctx, bool sweep) {
  const auto& c = ctx.c;
  ctx.csv << "n,param,successes,trials,estimate,lo,hi" << (sweep ? ",monotone_ok" : "") << '\n';
  json points = json::array();
  bool all_monotone = true;
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    const EventSpec ev = event_spec(c, n);
    std::optional<BinomialEstimate> prev;
    for (std::size_t vi = 0; vi < c.values.size(); ++vi) {
      // One seed per n: replica i shares its stream across parameter values.
      const std::uint64_t seed = sweep ? point_seed(c, n, 0) : point_seed(c, n, vi);
      const EventEstimate e = estimate_event_probability(ev, g, rates(c, c.values[vi]), c.replicas, seed,
                                                         c.level, c.threads);
      for (std::size_t i = 0; i < e.outcomes.size(); ++i)
        ctx.trace({{"n", n}, {"param", c.values[vi]}, {"replica", i}, {"outcome", e.outcomes[i]}});
      json pt = {{"n", n}, {"param", c.values[vi]}, {"event", c.event}, {"estimate", estimate_json(e.estimate)}};
      ctx.csv << n << ',' << num(c.values[vi]) << ',' << e.estimate.successes << ',' << e.estimate.trials << ','
              << num(e.estimate.estimate) << ',' << num(e.estimate.lo) << ',' << num(e.estimate.hi);
      if (sweep) {
        // Non-decreasing within confidence: no later upper bound below an
        // earlier lower bound.
        const bool ok = !prev || e.estimate.hi >= prev->lo;
        all_monotone = all_monotone && ok;
        pt["monotone_ok"] = ok;
        ctx.csv << ',' << (ok ? 1 : 0);
      }
      ctx.csv << '\n';
      prev = e.estimate;
      points.push_back(pt);
    }
  }
  json m = {{"points", points}};
  if (sweep) m["monotone_ok"] = all_monotone;
  return m;
}

json run_finite_size(Context& ctx) {
  const auto& c = ctx.c;
  ctx.csv << "n,param,vertical,vertical_hi,horizontal,horizontal_lo,branch\n";
  json points = json::array();
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    for (std::size_t vi = 0; vi < c.values.size(); ++vi) {
      const FiniteSizeReport r = finite_size_report(g, rates(c, c.values[vi]), c.eps_hat, c.replicas,
                                                    point_seed(c, n, vi), c.level, c.threads);
      points.push_back({{"n", n},
                        {"param", c.values[vi]},
                        {"vertical", estimate_json(r.vertical)},
                        {"horizontal", estimate_json(r.horizontal)},
                        {"eps_hat", r.eps_hat},
                        {"branch", to_string(r.branch)}});
      ctx.csv << n << ',' << num(c.values[vi]) << ',' << num(r.vertical.estimate) << ',' << num(r.vertical.hi)
              << ',' << num(r.horizontal.estimate) << ',' << num(r.horizontal.lo) << ',' << to_string(r.branch)
              << '\n';
    }
  }
  return {{"points", points}};
}

// k crossing rectangles [0, 3n] x [0, n] stacked vertically 2 floor(sqrt n) + 1
// apart.
std::vector<CrossingSpec> mixing_events(const ExperimentConfig& c, int n) {
  const int gap = 2 * floor_sqrt(n) + 1;
  const Direction d = c.event == "vertical" ? Direction::vertical : Direction::horizontal;
  std::vector<CrossingSpec> out;
  for (int j = 0; j < c.mixing_k; ++j) {
    const int y0 = j * (n + gap);
    out.push_back({{0, y0, 3 * n, y0 + n}, d, Wrap::none});
  }
  return out;
}

json run_mixing(Context& ctx) {
  const auto& c = ctx.c;
  ctx.csv << "n,param,joint_stationary,product_stationary,joint_truncated,product_truncated,"
             "positive_association_ok,factorization_z\n";
  json points = json::array();
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    const auto events = mixing_events(c, n);
    for (std::size_t vi = 0; vi < c.values.size(); ++vi) {
      const MixingReport r = mixing_check(g, rates(c, c.values[vi]), events, c.replicas, point_seed(c, n, vi),
                                          c.deep_scale, c.level, c.threads);
      json rects = json::array();
      for (const auto& e : events) rects.push_back(to_json(e.rect));
      json ms = json::array(), mt = json::array();
      for (const auto& e : r.marginal_stationary) ms.push_back(estimate_json(e));
      for (const auto& e : r.marginal_truncated) mt.push_back(estimate_json(e));
      points.push_back({{"n", n},
                        {"param", c.values[vi]},
                        {"rects", rects},
                        {"deep_scale", r.deep_scale},
                        {"joint_stationary", estimate_json(r.joint_stationary)},
                        {"marginal_stationary", ms},
                        {"product_stationary", r.product_stationary},
                        {"product_stationary_se", r.product_stationary_se},
                        {"joint_truncated", estimate_json(r.joint_truncated)},
                        {"marginal_truncated", mt},
                        {"product_truncated", r.product_truncated},
                        {"product_truncated_se", r.product_truncated_se},
                        {"positive_association_ok", r.positive_association_ok},
                        {"truncated_factorization_z", r.truncated_factorization_z},
                        {"footprints_disjoint", r.footprints_disjoint},
                        {"factorization_mismatches", r.factorization_mismatches},
                        {"nesting_violations", r.nesting_violations}});
      if (r.factorization_mismatches || r.nesting_violations)
        ctx.violation({{"experiment", "mixing"},
                       {"n", n},
                       {"param", c.values[vi]},
                       {"factorization_mismatches", r.factorization_mismatches},
                       {"nesting_violations", r.nesting_violations}});
      ctx.csv << n << ',' << num(c.values[vi]) << ',' << num(r.joint_stationary.estimate) << ','
              << num(r.product_stationary) << ',' << num(r.joint_truncated.estimate) << ','
              << num(r.product_truncated) << ',' << (r.positive_association_ok ? 1 : 0) << ','
              << num(r.truncated_factorization_z) << '\n';
    }
  }
  return {{"points", points}};
}

json run_influence(Context& ctx) {
  const auto& c = ctx.c;
  ctx.csv << "n,param,class,members,influence,stderr\n";
  json points = json::array();
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    const double delta = delta_at(c, n);
    for (std::size_t vi = 0; vi < c.values.size(); ++vi) {
      InfluenceOptions opt;
      opt.per_member = c.per_member;
      opt.level = c.level;
      opt.threads = c.threads;
      opt.rule = guard_rule(c);
      const CylinderInfluence ci =
          influence_mc(g, rates(c, c.values[vi]), delta, c.replicas, point_seed(c, n, vi), opt);
      const InfluenceReport& r = ci.report;
      json classes = json::array();
      for (std::size_t k = 0; k < r.classes.size(); ++k) {
        const ClassInfluence& cl = r.classes[k];
        json cj = {{"key", cl.key}, {"members", cl.members}, {"influence", cl.influence},
                   {"stderr", cl.stderr_}, {"total", cl.total}};
        if (k < ci.members.size() && !ci.members[k].empty()) {
          json mem = json::array();
          for (const auto& m : ci.members[k])
            mem.push_back({{"column", m.column}, {"estimate", estimate_json(m.estimate)}});
          cj["per_member"] = mem;
        }
        classes.push_back(cj);
        ctx.csv << n << ',' << num(c.values[vi]) << ',' << '"' << cl.key << '"' << ',' << cl.members << ','
                << num(cl.influence) << ',' << num(cl.stderr_) << '\n';
      }
      points.push_back({{"n", n},
                        {"param", c.values[vi]},
                        {"delta", delta},
                        {"probability", r.probability},
                        {"probability_se", r.probability_se},
                        {"sum_influences", r.sum_influences},
                        {"sum_influences_se", r.sum_influences_se},
                        {"max_influence", r.max_influence},
                        {"m", r.m},
                        {"classes", classes}});
    }
  }
  return {{"points", points}};
}

json run_threshold_window(Context& ctx) {
  const auto& c = ctx.c;
  ctx.csv << "n,delta,low_q,high_q,width,width_lo,width_hi,diff_bound_ratio\n";
  std::vector<ThresholdWindow> ws;
  json windows = json::array();
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    const double delta = delta_at(c, n);
    const ThresholdWindow w = threshold_window(g, delta, event_spec(c, n), c.values, c.replicas,
                                               point_seed(c, n, 0), c.window_eps, c.level, c.threads);
    ws.push_back(w);
    json pts = json::array();
    for (const auto& p : w.points) pts.push_back({{"q", p.q}, {"estimate", estimate_json(p.estimate)}});
    auto crossing_json = [](const LevelCrossing& x) {
      return json{{"reached", x.reached}, {"censored", x.censored}, {"q", x.q}};
    };
    auto finite = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
    windows.push_back({{"n", n},
                       {"delta", w.delta},
                       {"eps", w.eps},
                       {"points", pts},
                       {"low", crossing_json(w.low)},
                       {"high", crossing_json(w.high)},
                       {"width", finite(w.width)},
                       {"width_lo", finite(w.width_lo)},
                       {"width_hi", finite(w.width_hi)},
                       {"diff_bound_ratio", w.diff_bound_ratio},
                       {"monotone_ok", w.monotone_ok}});
    ctx.csv << n << ',' << num(w.delta) << ',' << num(w.low.q) << ',' << num(w.high.q) << ',' << num(w.width)
            << ',' << num(w.width_lo) << ',' << num(w.width_hi) << ',' << num(w.diff_bound_ratio) << '\n';
  }
  return {{"windows", windows}, {"non_increasing", windows_non_increasing(ws)}};
}

json run_sandwich(Context& ctx) {
  const auto& c = ctx.c;
  ctx.csv << "n,param,replicas,reachable,certified,stable,lower_bound_failures\n";
  json points = json::array();
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    const double delta = delta_at(c, n);
    const Vertex x{(g.box_L.x0 + g.box_L.x1) / 2, (g.box_L.y0 + g.box_L.y1) / 2};
    const SpaceTimeBox region = sandwich_region(x, n, delta);
    for (std::size_t vi = 0; vi < c.values.size(); ++vi) {
      const RateParams p = rates(c, c.values[vi]);
      const std::uint64_t seed = point_seed(c, n, vi);
      std::vector<std::array<int, 3>> res(c.replicas);
      std::vector<std::string> errors(c.replicas);
      parallel_for(c.replicas, c.threads, [&](std::size_t i) {
        try {
          const SandwichResult s = sandwich_check(sample_region(region, p, derive_key(seed, i)), delta, x, n,
                                                  guard_rule(c));
          res[i] = {s.reachable, s.certified, s.stable};
        } catch (const std::logic_error& e) {
          res[i] = {-1, -1, -1};
          errors[i] = e.what();
        }
      });
      std::size_t reach = 0, cert = 0, stable = 0, lower_fail = 0;
      for (std::size_t i = 0; i < res.size(); ++i) {
        if (res[i][0] < 0) {
          ctx.violation({{"experiment", "sandwich"}, {"n", n}, {"param", c.values[vi]}, {"replica", i},
                         {"seed", derive_key(seed, i)}, {"error", errors[i]}});
          continue;
        }
        reach += res[i][0];
        cert += res[i][1];
        stable += res[i][2];
        lower_fail += res[i][2] && !res[i][1];
        ctx.trace({{"n", n}, {"param", c.values[vi]}, {"replica", i}, {"reachable", res[i][0]},
                   {"certified", res[i][1]}, {"stable", res[i][2]}});
      }
      points.push_back({{"n", n},
                        {"param", c.values[vi]},
                        {"delta", delta},
                        {"target", {x.x, x.y}},
                        {"reachable", estimate_json(binomial_estimate(reach, c.replicas, c.level))},
                        {"certified", estimate_json(binomial_estimate(cert, c.replicas, c.level))},
                        {"stable", estimate_json(binomial_estimate(stable, c.replicas, c.level))},
                        {"lower_bound_failures", lower_fail}});
      ctx.csv << n << ',' << num(c.values[vi]) << ',' << c.replicas << ',' << reach << ',' << cert << ','
              << stable << ',' << lower_fail << '\n';
    }
  }
  return {{"points", points}};
}

json run_coupling_audit(Context& ctx) {
  const auto& c = ctx.c;
  ctx.csv << "n,q,q_prime,pairs,size_cap,occupied,failures,unexplained,failure_rate,failure_rate_se,"
             "pairs_with_failure,pairs_with_oversized,max_cluster_size,crossed_over\n";
  json points = json::array();
  for (int n : c.n) {
    const GeometryPlan g = make_geometry(n);
    const double delta = delta_at(c, n);
    const double d1 = delta1_at(c, n);
    const IntervalGrid grid = IntervalGrid::for_targets(g.box_L, n, delta, d1);
    for (std::size_t vi = 0; vi < c.values.size(); ++vi) {
      CouplingParams p;
      p.q = c.values[vi];
      p.q_prime = c.q_prime;
      p.delta = delta;
      p.delta1 = d1;
      p.n = n;
      p.beta_prime = c.beta_prime ? *c.beta_prime : default_beta_prime(p.q, p.q_prime, n, c.alpha);
      const std::uint64_t seed = point_seed(c, n, vi);
      struct Pair {
        std::size_t occupied = 0, failures = 0, unexplained = 0, max_cluster = 0, crossed = 0, dominance = 0;
        bool oversized = false;
        json audit;
      };
      std::vector<Pair> pairs(c.replicas);
      parallel_for(c.replicas, c.threads, [&](std::size_t i) {
        const CoupledDiagrams cd = couple_diagrams(grid, p, derive_key(seed, i));
        const StabilityAudit a = verify_stability(cd, g.box_L, n, delta);
        Pair& r = pairs[i];
        r.occupied = a.occupied_copy1;
        r.failures = a.failures.size();
        r.unexplained = a.unexplained();
        r.max_cluster = a.max_cluster_size;
        r.oversized = a.any_oversized;
        r.dominance = cd.dominance_violations;
        for (const auto& f : cd.flags) r.crossed += f.crossed_over;
        if (c.trace) r.audit = audit_json(cd, a);
      });
      std::size_t occ = 0, fail = 0, unexpl = 0, with_fail = 0, with_over = 0, maxc = 0, crossed = 0;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Pair& r = pairs[i];
        occ += r.occupied;
        fail += r.failures;
        unexpl += r.unexplained;
        with_fail += r.failures > 0;
        with_over += r.oversized;
        maxc = std::max(maxc, r.max_cluster);
        crossed += r.crossed;
        if (r.dominance)
          ctx.violation({{"experiment", "coupling_audit"}, {"n", n}, {"q", p.q}, {"pair", i},
                         {"seed", derive_key(seed, i)}, {"dominance_violations", r.dominance}});
        if (c.trace) {
          json t = r.audit;
          t["pair"] = i;
          ctx.trace(t);
        }
      }
      // Ratio estimator over pairs; targets within a pair are dependent.
      const double rate = occ ? static_cast<double>(fail) / static_cast<double>(occ) : 0.0;
      double se = 0.0;
      const auto N = static_cast<double>(pairs.size());
      if (occ && pairs.size() > 1) {
        const double mean_occ = static_cast<double>(occ) / N;
        double ss = 0.0;
        for (const auto& r : pairs) {
          const double d = static_cast<double>(r.failures) - rate * static_cast<double>(r.occupied);
          ss += d * d;
        }
        se = std::sqrt(ss / (N * (N - 1))) / mean_occ;
      }
      const double z = normal_quantile_two_sided(c.level);
      points.push_back({{"n", n},
                        {"q", p.q},
                        {"q_prime", p.q_prime},
                        {"delta", delta},
                        {"delta1", d1},
                        {"beta_prime", p.beta_prime},
                        {"size_cap", p.size_cap()},
                        {"grid", {{"box", to_json(grid.box)}, {"levels", grid.levels}}},
                        {"pairs", pairs.size()},
                        {"occupied", occ},
                        {"failures", fail},
                        {"unexplained_failures", unexpl},
                        {"failure_rate", rate},
                        {"failure_rate_se", se},
                        {"failure_rate_lo", std::max(0.0, rate - z * se)},
                        {"failure_rate_hi", std::min(1.0, rate + z * se)},
                        {"pair_failure_frequency", estimate_json(binomial_estimate(with_fail, pairs.size(), c.level))},
                        {"pairs_with_oversized", with_over},
                        {"max_cluster_size", maxc},
                        {"crossed_over", crossed}});
      ctx.csv << n << ',' << num(p.q) << ',' << num(p.q_prime) << ',' << pairs.size() << ',' << p.size_cap() << ','
              << occ << ',' << fail << ',' << unexpl << ',' << num(rate) << ',' << num(se) << ',' << with_fail
              << ',' << with_over << ',' << maxc << ',' << crossed << '\n';
    }
  }
  return {{"points", points}};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  Context ctx{c, out, {}};
  json metrics;
  switch (c.experiment) {
    case ExperimentKind::tail: metrics = run_tail(ctx); break;
    case ExperimentKind::crossing: metrics = run_crossing(ctx, false); break;
    case ExperimentKind::sweep: metrics = run_crossing(ctx, true); break;
    case ExperimentKind::finite_size: metrics = run_finite_size(ctx); break;
    case ExperimentKind::mixing: metrics = run_mixing(ctx); break;
    case ExperimentKind::influence: metrics = run_influence(ctx); break;
    case ExperimentKind::threshold_window: metrics = run_threshold_window(ctx); break;
    case ExperimentKind::sandwich: metrics = run_sandwich(ctx); break;
    case ExperimentKind::coupling_audit: metrics = run_coupling_audit(ctx); break;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json cfg = to_json(c);
  cfg["derived"] = json::array();
  for (int n : c.n) {
    json d = {{"n", n}, {"delta", delta_at(c, n)}, {"delta1", delta1_at(c, n)}};
    if (c.experiment == ExperimentKind::coupling_audit)
      for (double q : c.values)
        d["default_beta_prime"].push_back(default_beta_prime(q, c.q_prime, n, c.alpha));
    cfg["derived"].push_back(d);
  }
  out.record = {{"artifact_version", kArtifactVersion},
                {"experiment", to_string(c.experiment)},
                {"config_hash", config_hash(c)},
                {"config", cfg},
                {"metrics", metrics},
                {"invariant_violations", out.violations.size()},
                {"timing", {{"wall_clock_seconds", secs}}}};
  out.csv = ctx.csv.str();
  return out;
}

std::string result_body(const json& record) {
  json j = record;
  j.erase("timing");
  if (j.contains("config")) {
    j["config"].erase("output");
    j["config"].erase("threads");
    j["config"].erase("trace");
  }
  return j.dump();
}

WrittenFiles write_result(const ExperimentConfig& c, const RunResult& r) {
  const std::filesystem::path prefix(c.output);
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  WrittenFiles w;
  auto with = [&](const std::string& ext) { return std::filesystem::path(prefix.string() + ext); };
  w.json = with(".json");
  w.csv = with(".csv");
  write_file_atomic(w.csv, r.csv);
  if (c.trace) {
    std::string body;
    for (const auto& line : r.trace) body += line + '\n';
    w.trace = with(".trace.ndjson");
    write_file_atomic(*w.trace, body);
  }
  if (r.violated()) {
    w.forensics = with(".violation.json");
    write_file_atomic(*w.forensics,
                      json{{"config_hash", r.record.at("config_hash")}, {"violations", r.violations}}.dump(2) + '\n');
  }
  write_file_atomic(w.json, r.record.dump(2) + '\n');
  return w;
}

ReplayVerdict replay(const json& record, std::optional<int> threads) {
  if (!record.is_object() || !record.contains("config") || !record.contains("metrics"))
    throw ConfigError("result has no embedded config or metrics");
  if (!record["config"].contains("seed")) throw ConfigError("result has no seed");
  ExperimentConfig c = config_from_json(record["config"]);
  if (threads) c.threads = *threads;
  c.trace = false;
  const RunResult r = run_experiment(c);
  ReplayVerdict v;
  v.config_hash = config_hash(c);
  v.differences = json::diff(record["metrics"], r.record["metrics"]);
  if (record.value("config_hash", std::string()) != v.config_hash)
    v.differences.push_back({{"op", "replace"}, {"path", "/config_hash"}, {"value", v.config_hash}});
  v.match = v.differences.empty();
  return v;
}

ReplayVerdict replay_file(const std::filesystem::path& path, std::optional<int> threads) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError("cannot read result " + path.string() + ": " + e.what());
  }
  return replay(j, threads);
}

}  // namespace cplab
