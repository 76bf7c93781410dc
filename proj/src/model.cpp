#include "chaosbench/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "chaosbench/rng.hpp"

namespace chaosbench::model {
namespace {

void require_dim(std::span<const double> v, int dim, const char* what) {
  if (v.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument(fmt::format("{}: expected dimension {}, got {}",
                                            what, dim, v.size()));
  }
}

double param_or(const ParamMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double required_param(const NamedTerm& term, const std::string& key) {
  const auto it = term.params.find(key);
  if (it == term.params.end()) {
    throw std::invalid_argument(
        fmt::format("{}: missing parameter '{}'", term.name, key));
  }
  return it->second;
}

void reject_unknown_params(const NamedTerm& term,
                           std::initializer_list<const char*> known) {
  for (const auto& [key, value] : term.params) {
    (void)value;
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return key == k; })) {
      throw std::invalid_argument(
          fmt::format("{}: unknown parameter '{}'", term.name, key));
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

std::vector<std::string> DissipativityProfile::problems() const {
  std::vector<std::string> out;
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(K1) || K1 < 0.0) out.push_back("K1 must be finite and >= 0");
  if (!finite(K2) || K2 <= 0.0) out.push_back("K2 must be finite and > 0");
  if (!finite(R) || R < 0.0) out.push_back("R must be finite and >= 0");
  if (!finite(K_sigma) || K_sigma < 0.0) out.push_back("K_sigma must be finite and >= 0");
  if (!finite(K_b) || K_b < 0.0) out.push_back("K_b must be finite and >= 0");
  if (!(alpha == 2.0 || (alpha > 1.0 && alpha < 2.0))) {
    out.push_back("alpha must lie in (1,2) or equal 2");
  }
  if (alpha == 2.0 && (!finite(beta) || beta <= 0.0)) {
    out.push_back("beta must be > 0 for Brownian noise");
  }
  return out;
}

void DissipativityProfile::validate() const {
  const auto issues = problems();
  if (issues.empty()) return;
  std::ostringstream msg;
  msg << "invalid dissipativity profile:";
  for (const auto& s : issues) msg << ' ' << s << ';';
  throw std::invalid_argument(msg.str());
}

double gamma_profile(double r, const DissipativityProfile& p) {
  if (r <= p.R) return p.K1 * r;
  if (r <= 2.0 * p.R) {
    return (-(p.K1 + p.K2) / p.R * (r - p.R) + p.K1) * r;
  }
  return -p.K2 * r;
}

double stable_dissipativity_bound(double r, const DissipativityProfile& p) {
  return r <= p.R ? p.K1 * r * r : -p.K2 * r * r;
}

int ModelSpec::noise_dim() const {
  return sigma.kind == DiffusionKind::zero ? 0 : dim;
}

std::string ModelSpec::id() const {
  auto term_id = [](const NamedTerm& t) {
    std::string s = t.name;
    for (const auto& [k, v] : t.params) s += fmt::format(":{}={}", k, v);
    return s;
  };
  return fmt::format("d{}/a{}/b0={}/b1={}/sigma={}", dim, profile.alpha,
                     term_id(b0_term), term_id(b1_term), term_id(sigma_term));
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"b0", "linear", "b0(x) = -kappa x", {"kappa"},
       "K1 = 0, K2 = kappa, R = 0 (purely dissipative; any R >= 0 is valid)"},
      {"b0", "cubic", "b0(x) = x - x^3 (d = 1)", {},
       "K1 = 1, K2 = 1, R = 3 (valid for both the Brownian and the stable form)"},
      {"b0", "radial-cubic", "b0(x) = x (1 - |x|^2)", {},
       "K1 = 1, K2 = 1, R = 3"},
      {"b1", "zero", "b1(x, y) = 0", {}, "K_b = 0"},
      {"b1", "curie-weiss", "b1(x, y) = -K_b (x - y)", {"K_b"}, "K_b"},
      {"b1", "bounded-tanh", "b1(x, y) = K_b tanh(x - y) componentwise", {"K_b"},
       "K_b"},
      {"sigma", "zero", "sigma(x) = 0", {}, "K_sigma = 0"},
      {"sigma", "identity", "sigma(x) = I_d", {}, "K_sigma = 0"},
      {"sigma", "constant", "sigma(x) = scale I_d", {"scale"}, "K_sigma = 0"},
      {"sigma", "scalar-tanh", "sigma(x) = (scale + slope tanh(x_1)) I_d",
       {"scale", "slope"}, "K_sigma = d slope^2 / 2"},
  };
  return entries;
}

ModelSpec make_model(const ModelRequest& req) {
  if (req.dim < 1) throw std::invalid_argument("dim must be >= 1");
  ModelSpec m;
  m.dim = req.dim;
  m.b0_term = req.b0;
  m.b1_term = req.b1;
  m.sigma_term = req.sigma;
  m.profile.beta = req.beta;
  m.profile.alpha = req.alpha;

  // Confinement drift and its declared (K1, K2, R).
  if (req.b0.name == "linear") {
    reject_unknown_params(req.b0, {"kappa"});
    m.b0.kind = DriftKind::linear;
    m.b0.kappa = param_or(req.b0.params, "kappa", 1.0);
    if (!(m.b0.kappa > 0.0)) throw std::invalid_argument("linear: kappa must be > 0");
    m.profile.K1 = 0.0;
    m.profile.K2 = m.b0.kappa;
    m.profile.R = 0.0;
  } else if (req.b0.name == "cubic") {
    reject_unknown_params(req.b0, {});
    if (req.dim != 1) throw std::invalid_argument("cubic: only defined for d = 1");
    m.b0.kind = DriftKind::cubic;
    m.profile.K1 = 1.0;
    m.profile.K2 = 1.0;
    m.profile.R = 3.0;
  } else if (req.b0.name == "radial-cubic") {
    reject_unknown_params(req.b0, {});
    m.b0.kind = DriftKind::radial_cubic;
    m.profile.K1 = 1.0;
    m.profile.K2 = 1.0;
    m.profile.R = 3.0;
  } else {
    throw std::invalid_argument(fmt::format("unknown drift '{}'", req.b0.name));
  }

  if (req.b1.name == "zero") {
    reject_unknown_params(req.b1, {});
    m.b1.kind = InteractionKind::zero;
  } else if (req.b1.name == "curie-weiss" || req.b1.name == "bounded-tanh") {
    reject_unknown_params(req.b1, {"K_b"});
    m.b1.kind = req.b1.name == "curie-weiss" ? InteractionKind::curie_weiss
                                             : InteractionKind::bounded_tanh;
    m.b1.strength = required_param(req.b1, "K_b");
    if (!(m.b1.strength >= 0.0)) {
      throw std::invalid_argument(fmt::format("{}: K_b must be >= 0", req.b1.name));
    }
  } else {
    throw std::invalid_argument(fmt::format("unknown interaction '{}'", req.b1.name));
  }
  m.profile.K_b = m.b1.strength;

  if (req.sigma.name == "zero") {
    reject_unknown_params(req.sigma, {});
    m.sigma.kind = DiffusionKind::zero;
  } else if (req.sigma.name == "identity") {
    reject_unknown_params(req.sigma, {});
    m.sigma.kind = DiffusionKind::identity;
    m.sigma.scale = 1.0;
  } else if (req.sigma.name == "constant") {
    reject_unknown_params(req.sigma, {"scale"});
    m.sigma.kind = DiffusionKind::constant;
    m.sigma.scale = required_param(req.sigma, "scale");
  } else if (req.sigma.name == "scalar-tanh") {
    reject_unknown_params(req.sigma, {"scale", "slope"});
    m.sigma.kind = DiffusionKind::scalar_tanh;
    m.sigma.scale = required_param(req.sigma, "scale");
    m.sigma.slope = required_param(req.sigma, "slope");
    m.profile.K_sigma = req.dim * m.sigma.slope * m.sigma.slope / 2.0;
  } else {
    throw std::invalid_argument(fmt::format("unknown diffusion '{}'", req.sigma.name));
  }

  if (req.alpha != 2.0 && m.sigma.kind != DiffusionKind::zero) {
    throw std::invalid_argument(
        "stable noise is additive: sigma must be 'zero' when alpha < 2");
  }

  if (req.K1) m.profile.K1 = *req.K1;
  if (req.K2) m.profile.K2 = *req.K2;
  if (req.R) m.profile.R = *req.R;
  m.profile.validate();
  return m;
}

void eval_b0(const ModelSpec& m, std::span<const double> x, std::span<double> out) {
  require_dim(x, m.dim, "eval_b0");
  require_dim(out, m.dim, "eval_b0 output");
  switch (m.b0.kind) {
    case DriftKind::linear:
      for (int i = 0; i < m.dim; ++i) out[i] = -m.b0.kappa * x[i];
      break;
    case DriftKind::cubic:
      out[0] = x[0] - x[0] * x[0] * x[0];
      break;
    case DriftKind::radial_cubic: {
      const double r2 = dot(x, x);
      for (int i = 0; i < m.dim; ++i) out[i] = x[i] * (1.0 - r2);
      break;
    }
  }
}

std::vector<double> eval_b0(const ModelSpec& m, std::span<const double> x) {
  std::vector<double> out(m.dim);
  eval_b0(m, x, out);
  return out;
}

void eval_b1(const ModelSpec& m, std::span<const double> x, std::span<const double> y,
             std::span<double> out) {
  require_dim(x, m.dim, "eval_b1");
  require_dim(y, m.dim, "eval_b1");
  require_dim(out, m.dim, "eval_b1 output");
  const double k = m.b1.strength;
  switch (m.b1.kind) {
    case InteractionKind::zero:
      std::fill(out.begin(), out.end(), 0.0);
      break;
    case InteractionKind::curie_weiss:
      for (int i = 0; i < m.dim; ++i) out[i] = -k * (x[i] - y[i]);
      break;
    case InteractionKind::bounded_tanh:
      for (int i = 0; i < m.dim; ++i) out[i] = k * std::tanh(x[i] - y[i]);
      break;
  }
}

std::vector<double> eval_b1(const ModelSpec& m, std::span<const double> x,
                            std::span<const double> y) {
  std::vector<double> out(m.dim);
  eval_b1(m, x, y, out);
  return out;
}

void eval_sigma(const ModelSpec& m, std::span<const double> x, std::span<double> out) {
  require_dim(x, m.dim, "eval_sigma");
  const int n = m.noise_dim();
  if (out.size() != static_cast<std::size_t>(m.dim * n)) {
    throw std::invalid_argument("eval_sigma: output must hold dim x noise_dim entries");
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (n == 0) return;
  double diag = m.sigma.scale;
  if (m.sigma.kind == DiffusionKind::scalar_tanh) {
    diag = m.sigma.scale + m.sigma.slope * std::tanh(x[0]);
  }
  for (int i = 0; i < m.dim; ++i) out[i * n + i] = diag;
}

std::vector<double> eval_sigma(const ModelSpec& m, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(m.dim * m.noise_dim()));
  eval_sigma(m, x, out);
  return out;
}

void add_sigma_times(const ModelSpec& m, std::span<const double> x,
                     std::span<const double> dB, std::span<double> out) {
  // Every catalog diffusion is a scalar multiple of the identity.
  if (m.noise_dim() == 0) return;
  double diag = m.sigma.scale;
  if (m.sigma.kind == DiffusionKind::scalar_tanh) {
    diag = m.sigma.scale + m.sigma.slope * std::tanh(x[0]);
  }
  for (int i = 0; i < m.dim; ++i) out[i] += diag * dB[i];
}

void eval_b0_rows(const ModelSpec& m, std::span<const double> points,
                  std::span<double> out) {
  const std::size_t d = static_cast<std::size_t>(m.dim);
  if (points.size() % d != 0 || out.size() != points.size()) {
    throw std::invalid_argument("eval_b0_rows: shape mismatch");
  }
  for (std::size_t off = 0; off < points.size(); off += d) {
    eval_b0(m, points.subspan(off, d), out.subspan(off, d));
  }
}

AuditReport audit_assumptions(const ModelSpec& m, std::size_t sample_count,
                              double box_radius, std::uint64_t rng_seed,
                              double tolerance) {
  if (sample_count < 1) throw std::invalid_argument("audit: sample_count must be >= 1");
  if (!(box_radius > 0.0)) throw std::invalid_argument("audit: box_radius must be > 0");

  const int d = m.dim;
  Stream rng(StreamKey{rng_seed, StreamRole::audit, 0, 0});
  std::vector<double> x(d), y(d), bx(d), by(d), diff(d), u(d);
  std::vector<double> xt(d), yt(d), b1a(d), b1b(d);
  std::vector<double> sx(static_cast<std::size_t>(d * m.noise_dim()));
  std::vector<double> sy(sx.size());

  AuditReport rep;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  rep.sigma_violation = -std::numeric_limits<double>::infinity();

  auto uniform_box = [&](std::vector<double>& v) {
    for (auto& c : v) c = box_radius * (2.0 * rng.uniform() - 1.0);
  };
  auto unit_direction = [&](std::vector<double>& v) {
    double n = 0.0;
    do {
      for (auto& c : v) c = rng.normal();
      n = norm(v);
    } while (n == 0.0);
    for (auto& c : v) c /= n;
  };
  auto check_finite = [&](const std::vector<double>& v, const char* what) {
    for (double c : v) {
      if (!std::isfinite(c)) {
        throw std::domain_error(fmt::format("audit: non-finite {} evaluation", what));
      }
    }
  };

  auto check_pair = [&] {
    eval_b0(m, x, bx);
    eval_b0(m, y, by);
    check_finite(bx, "b0");
    check_finite(by, "b0");
    for (int i = 0; i < d; ++i) diff[i] = x[i] - y[i];
    const double r = norm(diff);
    double inner = 0.0;
    for (int i = 0; i < d; ++i) inner += diff[i] * (bx[i] - by[i]);
    const double bound = m.profile.brownian() ? gamma_profile(r, m.profile) * r
                                              : stable_dissipativity_bound(r, m.profile);
    rep.worst_violation = std::max(rep.worst_violation, inner - bound);

    if (!sx.empty()) {
      eval_sigma(m, x, sx);
      eval_sigma(m, y, sy);
      double hs = 0.0;
      for (std::size_t k = 0; k < sx.size(); ++k) hs += (sx[k] - sy[k]) * (sx[k] - sy[k]);
      rep.sigma_violation =
          std::max(rep.sigma_violation, 0.5 * hs - m.profile.K_sigma * r * r);
    } else {
      rep.sigma_violation = std::max(rep.sigma_violation, 0.0);
    }
    ++rep.checked_pairs;
  };

  const double max_sep = 2.0 * box_radius * std::sqrt(static_cast<double>(d));
  for (std::size_t s = 0; s < sample_count; ++s) {
    // uniform pair in the box
    uniform_box(x);
    uniform_box(y);
    check_pair();

    // antithetic near-diagonal pair
    uniform_box(x);
    unit_direction(u);
    const double h = 1e-3 * box_radius * rng.uniform();
    const std::vector<double> centre = x;
    for (int i = 0; i < d; ++i) y[i] = centre[i] + h * u[i];
    check_pair();
    for (int i = 0; i < d; ++i) y[i] = centre[i] - h * u[i];
    check_pair();

    // log-uniform separation, covering every branch of the profile
    const double r = 1e-3 * std::pow(max_sep / 1e-3, rng.uniform());
    for (int i = 0; i < d; ++i) y[i] = centre[i] + r * u[i];
    check_pair();

    // interaction Lipschitz ratio on two independent pairs
    uniform_box(xt);
    uniform_box(yt);
    uniform_box(x);
    uniform_box(y);
    if (s % 2 == 1) {
      // nearby second pair
      for (int i = 0; i < d; ++i) {
        xt[i] = x[i] + 1e-3 * box_radius * (2.0 * rng.uniform() - 1.0);
        yt[i] = y[i] + 1e-3 * box_radius * (2.0 * rng.uniform() - 1.0);
      }
    }
    eval_b1(m, x, y, b1a);
    eval_b1(m, xt, yt, b1b);
    check_finite(b1a, "b1");
    check_finite(b1b, "b1");
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (int i = 0; i < d; ++i) {
      num += (b1a[i] - b1b[i]) * (b1a[i] - b1b[i]);
      dx += (x[i] - xt[i]) * (x[i] - xt[i]);
      dy += (y[i] - yt[i]) * (y[i] - yt[i]);
    }
    const double den = std::sqrt(dx) + std::sqrt(dy);
    if (den > 0.0) {
      rep.lipschitz_b1_estimate = std::max(rep.lipschitz_b1_estimate, std::sqrt(num) / den);
    }
  }

  rep.passed = rep.worst_violation <= tolerance &&
               rep.lipschitz_b1_estimate <= m.profile.K_b + tolerance &&
               rep.sigma_violation <= tolerance;
  return rep;
}

}  // namespace chaosbench::model
