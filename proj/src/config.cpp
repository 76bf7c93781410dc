#include "chaosbench/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "chaosbench/constants.hpp"

namespace chaosbench::harness {
namespace {

using nlohmann::json;

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

class Reader {
 public:
  Reader(const json& j, std::string where, std::vector<std::string>& problems)
      : j_(j), where_(std::move(where)), problems_(problems) {
    if (!j_.is_object()) problems_.push_back(fmt::format("{}: expected an object", where_));
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  std::optional<double> number(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_number()) return bad<double>(key, "a number");
    return v.get<double>();
  }

  std::optional<std::uint64_t> count(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!non_negative_integer(v)) return bad<std::uint64_t>(key, "a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::optional<bool> boolean(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) return bad<bool>(key, "true or false");
    return v.get<bool>();
  }

  std::optional<std::string> string(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_string()) return bad<std::string>(key, "a string");
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_array()) return bad<std::vector<double>>(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) return bad<std::vector<double>>(key, "an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::optional<std::vector<std::size_t>> counts(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_array()) return bad<std::vector<std::size_t>>(key, "an array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!non_negative_integer(e) || e.get<std::uint64_t>() == 0) {
        return bad<std::vector<std::size_t>>(key, "an array of positive integers");
      }
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  const json* object(const char* key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) problems_.push_back(fmt::format("{}: unknown key '{}'", where_, key));
    }
  }

  void problem(const std::string& msg) { problems_.push_back(fmt::format("{}: {}", where_, msg)); }

 private:
  template <typename T>
  std::optional<T> bad(const char* key, const char* expected) {
    problems_.push_back(fmt::format("{}.{}: expected {}", where_, key, expected));
    return std::nullopt;
  }

  const json& j_;
  std::string where_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

model::NamedTerm parse_term(const json& j, const std::string& where,
                            std::vector<std::string>& problems) {
  model::NamedTerm term;
  Reader r(j, where, problems);
  if (auto name = r.string("name")) {
    term.name = *name;
  } else {
    r.problem("missing 'name'");
  }
  if (const json* params = r.object("params")) {
    if (!params->is_object()) {
      r.problem("'params' must be an object of numbers");
    } else {
      for (const auto& [k, v] : params->items()) {
        if (!v.is_number()) {
          r.problem(fmt::format("params.{} must be a number", k));
        } else {
          term.params[k] = v.get<double>();
        }
      }
    }
  }
  r.finish();
  return term;
}

particles::InitialLaw parse_mu0(const json& j, std::vector<std::string>& problems) {
  particles::InitialLaw law;
  Reader r(j, "mu0", problems);
  if (auto kind = r.string("kind")) {
    if (*kind == "point") {
      law.kind = particles::InitialKind::point;
    } else if (*kind == "gaussian") {
      law.kind = particles::InitialKind::gaussian;
    } else if (*kind == "pareto") {
      law.kind = particles::InitialKind::pareto;
    } else {
      r.problem(fmt::format("unknown kind '{}' (point, gaussian, pareto)", *kind));
    }
  }
  if (auto v = r.number("center")) law.center = *v;
  if (auto v = r.number("scale")) law.scale = *v;
  if (auto v = r.number("tail")) law.tail = *v;
  if (!(law.scale > 0.0)) r.problem("scale must be > 0");
  if (law.kind == particles::InitialKind::pareto && !(law.tail > 1.0)) {
    r.problem("tail must be > 1 for a law with finite mean");
  }
  r.finish();
  return law;
}

}  // namespace

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::constants_report: return "constants_report";
    case Scenario::lln_rate: return "lln_rate";
    case Scenario::brownian_contraction: return "brownian_contraction";
    case Scenario::stable_contraction: return "stable_contraction";
    case Scenario::tv_n_scaling: return "tv_n_scaling";
    case Scenario::ou_exact: return "ou_exact";
    case Scenario::coupling_bias_study: return "coupling_bias_study";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::constants_report, Scenario::lln_rate, Scenario::brownian_contraction,
                     Scenario::stable_contraction, Scenario::tv_n_scaling, Scenario::ou_exact,
                     Scenario::coupling_bias_study}) {
    if (name == scenario_name(s)) return s;
  }
  return std::nullopt;
}

model::ModelRequest parse_model_request(const json& root, std::vector<std::string>& problems) {
  const json& j = root.is_object() && root.contains("model") ? root.at("model") : root;
  model::ModelRequest req;
  Reader r(j, "model", problems);
  if (auto v = r.count("dim")) req.dim = static_cast<int>(*v);
  if (auto v = r.number("beta")) req.beta = *v;
  if (auto v = r.number("alpha")) req.alpha = *v;
  if (const json* t = r.object("b0")) req.b0 = parse_term(*t, "model.b0", problems);
  if (const json* t = r.object("b1")) req.b1 = parse_term(*t, "model.b1", problems);
  if (const json* t = r.object("sigma")) req.sigma = parse_term(*t, "model.sigma", problems);
  if (const json* p = r.object("profile")) {
    Reader pr(*p, "model.profile", problems);
    if (auto v = pr.number("K1")) req.K1 = *v;
    if (auto v = pr.number("K2")) req.K2 = *v;
    if (auto v = pr.number("R")) req.R = *v;
    pr.finish();
  }
  r.finish();
  return req;
}

ParseResult parse_config(const json& j) {
  ParseResult out;
  auto& problems = out.problems;
  ExperimentConfig c;
  c.source = j;
  Reader r(j, "config", problems);

  if (auto v = r.count("schema")) {
    if (*v != 1) r.problem(fmt::format("unsupported schema {} (expected 1)", *v));
    c.schema = static_cast<int>(*v);
  } else {
    r.problem("missing 'schema' (expected 1)");
  }
  if (auto v = r.string("scenario")) {
    if (auto s = parse_scenario(*v)) {
      c.scenario = *s;
    } else {
      r.problem(fmt::format("unknown scenario '{}'", *v));
    }
  } else {
    r.problem("missing 'scenario'");
  }
  if (auto v = r.count("seed")) {
    c.seed = *v;
  } else {
    r.problem("missing 'seed' (a non-negative integer is mandatory)");
  }
  if (auto v = r.string("output")) c.output = *v;

  if (r.has("model")) {
    c.model = parse_model_request(j.at("model"), problems);
  } else if (j.is_object()) {
    r.problem("missing 'model'");
  }

  if (auto v = r.counts("N_grid")) c.N_grid = *v;
  if (auto v = r.numbers("t_grid")) c.t_grid = *v;
  if (auto v = r.number("T")) c.T = *v;
  if (auto v = r.number("dt")) c.dt = *v;
  if (auto v = r.count("replicas")) c.replicas = *v;
  if (auto v = r.count("M")) c.M = *v;
  if (const json* m = r.object("mu0")) c.mu0 = parse_mu0(*m, problems);
  if (auto v = r.number("epsilon")) c.epsilon = *v;
  if (auto v = r.number("merge_radius")) c.merge_radius = *v;
  if (auto v = r.number("kappa")) c.kappa = *v;
  if (r.has("eta")) {
    const auto& e = j.at("eta");
    if (e.is_number()) {
      c.eta = e.get<double>();
    } else if (e.is_string() && e.get<std::string>() == "optimal") {
      c.eta_optimal = true;
    } else {
      r.problem("eta must be a number in (0,1) or \"optimal\"");
    }
  }
  if (auto v = r.number("trunc")) c.trunc = *v;
  if (auto v = r.count("picard_iters")) c.picard_iters = static_cast<int>(*v);
  if (auto v = r.number("snapshot_dt")) c.snapshot_dt = *v;
  if (auto v = r.string("pairing")) {
    if (*v == "product") {
      c.pairing = particles::Pairing::product;
    } else if (*v == "optimal") {
      c.pairing = particles::Pairing::optimal;
    } else if (*v == "identical") {
      c.pairing = particles::Pairing::identical;
    } else {
      r.problem(fmt::format("unknown pairing '{}' (product, optimal, identical)", *v));
    }
  }
  if (auto v = r.count("bins")) c.bins = static_cast<int>(*v);
  if (auto v = r.numbers("range")) {
    if (v->size() != 2 || !((*v)[1] > (*v)[0])) {
      r.problem("range must be [lo, hi] with hi > lo");
    } else {
      c.range = std::make_pair((*v)[0], (*v)[1]);
    }
  }
  if (auto v = r.boolean("half_tv")) c.half_tv = *v;
  if (auto v = r.boolean("plot")) c.plot = *v;
  if (auto v = r.number("tail_index")) c.tail_index = *v;
  if (auto v = r.number("lln_eps")) c.lln_eps = *v;
  if (auto v = r.count("reps")) c.reps = *v;
  if (auto v = r.number("tv_tolerance")) c.tv_tolerance = *v;
  if (auto v = r.numbers("epsilon_grid")) c.epsilon_grid = *v;
  if (auto v = r.numbers("trunc_grid")) c.trunc_grid = *v;
  r.finish();

  // Generic numeric ranges.
  if (!(c.dt > 0.0)) problems.push_back("config: dt must be > 0");
  if (!(c.T > 0.0)) problems.push_back("config: T must be > 0");
  if (c.replicas < 1) problems.push_back("config: replicas must be >= 1");
  if (c.reps < 2) problems.push_back("config: reps must be >= 2");
  if (!(c.epsilon > 0.0)) problems.push_back("config: epsilon must be > 0");
  if (c.picard_iters < 1) problems.push_back("config: picard_iters must be >= 1");
  if (c.bins < 1) problems.push_back("config: bins must be >= 1");
  if (c.eta && !(*c.eta > 0.0 && *c.eta < 1.0)) problems.push_back("config: eta must lie in (0,1)");
  if (c.kappa && !(*c.kappa > 0.0)) problems.push_back("config: kappa must be > 0");
  if (c.trunc && !(*c.trunc > 0.0)) problems.push_back("config: trunc must be > 0");
  if (c.merge_radius && !(*c.merge_radius >= 0.0 && *c.merge_radius < c.epsilon / 2.0)) {
    problems.push_back("config: merge_radius must lie in [0, epsilon/2)");
  }
  for (double t : c.t_grid) {
    if (!(t >= 0.0)) problems.push_back("config: t_grid entries must be >= 0");
  }
  if (c.snapshot_dt > 0.0 && c.dt > 0.0) {
    const double k = std::round(c.snapshot_dt / c.dt);
    if (k < 1.0 || std::abs(k * c.dt - c.snapshot_dt) > 1e-9 * c.snapshot_dt) {
      problems.push_back("config: snapshot_dt must be a positive multiple of dt");
    }
  } else if (!(c.snapshot_dt > 0.0)) {
    problems.push_back("config: snapshot_dt must be > 0");
  }

  if (problems.empty()) out.config = std::move(c);
  return out;
}

std::vector<std::string> validate(const json& j) {
  ParseResult parsed = parse_config(j);
  std::vector<std::string> diags = parsed.problems;
  if (!parsed.config) return diags;
  const ExperimentConfig& c = *parsed.config;

  model::ModelSpec m;
  try {
    m = model::make_model(c.model);
  } catch (const std::exception& e) {
    diags.push_back(fmt::format("model: {}", e.what()));
    return diags;
  }

  auto need = [&](bool ok, const char* what) {
    if (!ok) diags.push_back(fmt::format("{}: {}", scenario_name(c.scenario), what));
  };
  const bool stable_scenario = c.scenario == Scenario::stable_contraction;
  const bool brownian_scenario =
      c.scenario == Scenario::brownian_contraction || c.scenario == Scenario::ou_exact;

  if (stable_scenario && m.profile.brownian()) {
    diags.push_back(
        "stable_contraction: type error, alpha = 2 describes Brownian noise; this scenario "
        "needs alpha-stable noise with alpha in (1,2)");
  }
  if (brownian_scenario && !m.profile.brownian()) {
    diags.push_back(fmt::format("{}: type error, this scenario needs Brownian noise (alpha = 2)",
                                scenario_name(c.scenario)));
  }

  switch (c.scenario) {
    case Scenario::constants_report:
      break;
    case Scenario::lln_rate:
      need(c.N_grid.size() >= 4, "N_grid needs at least 4 sizes");
      need(c.tail_index > 1.0, "tail_index must be > 1");
      need(c.lln_eps > 0.0 && c.lln_eps < 1.0 && 1.0 + c.lln_eps < c.tail_index,
           "lln_eps must lie in (0,1) with 1 + lln_eps < tail_index");
      break;
    case Scenario::brownian_contraction:
    case Scenario::stable_contraction:
      need(c.N_grid.size() == 1, "N_grid must hold exactly one N");
      need(c.t_grid.size() >= 3, "t_grid needs at least 3 times (the last one is the plateau)");
      break;
    case Scenario::tv_n_scaling:
      need(c.N_grid.size() >= 4, "N_grid needs at least 4 sizes");
      need(m.dim <= 2, "histogram total variation supports dim <= 2");
      need(c.reps >= 2, "reps must be >= 2");
      break;
    case Scenario::ou_exact:
      need(m.b0.kind == model::DriftKind::linear, "b0 must be 'linear'");
      need(m.b1.kind == model::InteractionKind::zero, "b1 must be 'zero'");
      need(m.sigma.kind == model::DiffusionKind::zero ||
               m.sigma.kind == model::DiffusionKind::identity ||
               m.sigma.kind == model::DiffusionKind::constant,
           "sigma must be constant");
      need(c.mu0.kind == particles::InitialKind::point, "mu0 must be a point mass");
      need(c.replicas >= 100, "replicas must be >= 100");
      break;
    case Scenario::coupling_bias_study:
      need(!c.epsilon_grid.empty(), "epsilon_grid must not be empty");
      need(!c.t_grid.empty(), "t_grid must not be empty");
      need(c.N_grid.size() == 1, "N_grid must hold exactly one N");
      for (double eps : c.epsilon_grid) need(eps > 0.0, "epsilon_grid entries must be > 0");
      for (double tr : c.trunc_grid) need(tr > 0.0, "trunc_grid entries must be > 0");
      break;
  }

  // The limit flow is stored on the snapshot grid, so every simulated horizon
  // has to land on it.
  auto on_grid = [&](double T) {
    const double k = std::round(T / c.snapshot_dt);
    return k >= 1.0 && std::abs(k * c.snapshot_dt - T) <= 1e-9 * std::max(1.0, T);
  };
  const bool uses_t_grid = c.scenario == Scenario::brownian_contraction ||
                           c.scenario == Scenario::stable_contraction ||
                           c.scenario == Scenario::coupling_bias_study;
  if (uses_t_grid && !c.t_grid.empty()) {
    need(on_grid(*std::max_element(c.t_grid.begin(), c.t_grid.end())),
         "the last t_grid entry must be a positive multiple of snapshot_dt");
  }
  if (c.scenario == Scenario::tv_n_scaling) {
    need(on_grid(c.T), "T must be a positive multiple of snapshot_dt");
  }

  // Admissibility of the interaction strength for the rate constants the
  // scenario compares against.
  try {
    if (c.scenario == Scenario::brownian_contraction && m.profile.brownian()) {
      const auto a = constants::check_kbkd(m.profile);
      if (!a.holds) {
        diags.push_back(fmt::format(
            "brownian_contraction: interaction-strength admissibility condition fails: K_b = {} "
            "is not below 2 beta^2 / ((K2 - K_sigma) f'(0)^2) = {:.6g} (margin {:.6g}); the "
            "contraction rate lambda would not be positive",
            m.profile.K_b, a.threshold, a.margin));
      }
    }
    if (stable_scenario && !m.profile.brownian()) {
      const double kappa = c.kappa.value_or(m.profile.R);
      const double trunc = c.trunc.value_or(kappa / 10.0);
      need(trunc < kappa, "trunc must be smaller than kappa");
      const double eta = c.eta_optimal
                             ? constants::optimal_eta(m.profile, m.dim, kappa)
                             : c.eta.value_or(0.5);
      const auto sc = constants::stable_constants(m.profile, m.dim, eta, kappa);
      if (!sc.condition.holds) {
        diags.push_back(fmt::format(
            "stable_contraction: interaction-strength admissibility condition fails: K_b = {} "
            "is not below 2 c1^2 K2 / (1 + c1)^2 = {:.6g} (margin {:.6g}, c1 = {:.6g})",
            m.profile.K_b, sc.condition.threshold, sc.condition.margin, sc.c1));
      }
    }
  } catch (const std::exception& e) {
    diags.push_back(fmt::format("constants: {}", e.what()));
  }
  return diags;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(fmt::format("{}: {}", path, e.what()));
  }
}

std::string config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace chaosbench::harness
