#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chaosbench::model {

/// Constants of the long-distance dissipativity assumption on b0, the
/// Lipschitz constants of the interaction and the diffusion, and the noise
/// descriptor. alpha == 2 encodes Brownian noise; alpha in (1, 2) encodes
/// rotationally invariant alpha-stable noise, in which case R plays the role
/// of the transition radius l0 and beta is unused.
///
/// R == 0 is accepted and means the profile is purely dissipative
/// (gamma(r) = -K2 r for every r > 0).
struct DissipativityProfile {
  double K1 = 0.0;
  double K2 = 1.0;
  double R = 0.0;
  double K_sigma = 0.0;
  double K_b = 0.0;
  double beta = 1.0;
  double alpha = 2.0;

  bool brownian() const { return alpha == 2.0; }
  /// Empty when every invariant holds.
  std::vector<std::string> problems() const;
  /// Throws std::invalid_argument naming every violated invariant.
  void validate() const;
};

/// The piecewise profile gamma: K1 r on [0, R], a quadratic bridge on
/// [R, 2R], and -K2 r beyond 2R. Continuous at both breakpoints.
double gamma_profile(double r, const DissipativityProfile& profile);

/// Right-hand side of the stable-case dissipativity bound on
/// <x - y, b0(x) - b0(y)> at |x - y| = r, with l0 = profile.R.
double stable_dissipativity_bound(double r, const DissipativityProfile& profile);

enum class DriftKind { linear, cubic, radial_cubic };
enum class InteractionKind { zero, curie_weiss, bounded_tanh };
enum class DiffusionKind { zero, identity, constant, scalar_tanh };

using ParamMap = std::map<std::string, double>;

/// A catalog name plus its parameters, as written in experiment configs.
struct NamedTerm {
  std::string name;
  ParamMap params;
};

struct Confinement {
  DriftKind kind = DriftKind::linear;
  double kappa = 1.0;  // linear only
};

struct Interaction {
  InteractionKind kind = InteractionKind::zero;
  double strength = 0.0;  // K_b

  /// True when (1/N) sum_m b1(x, y_m) only depends on the mean of the y_m.
  bool mean_separable() const {
    return kind == InteractionKind::zero || kind == InteractionKind::curie_weiss;
  }
};

struct Diffusion {
  DiffusionKind kind = DiffusionKind::zero;
  double scale = 0.0;
  double slope = 0.0;  // scalar_tanh only
};

struct ModelSpec {
  DissipativityProfile profile;
  int dim = 1;
  Confinement b0;
  Interaction b1;
  Diffusion sigma;
  NamedTerm b0_term;
  NamedTerm b1_term;
  NamedTerm sigma_term;

  /// Number of columns of sigma(x): the dimension of the multiplicative
  /// Brownian motion B. Zero when sigma vanishes.
  int noise_dim() const;
  std::string id() const;
};

/// Everything needed to resolve a ModelSpec from the catalog. Profile
/// constants come from the catalog entries; the optional overrides replace
/// the declared K1, K2, R (l0) when a caller wants a different, still valid,
/// profile. audit_assumptions() checks any such override.
struct ModelRequest {
  int dim = 1;
  double beta = 1.0;
  double alpha = 2.0;
  NamedTerm b0{"linear", {{"kappa", 1.0}}};
  NamedTerm b1{"zero", {}};
  NamedTerm sigma{"zero", {}};
  std::optional<double> K1;
  std::optional<double> K2;
  std::optional<double> R;
};

/// Resolves catalog names; throws std::invalid_argument on unknown names,
/// missing or invalid parameters, or an invalid resulting profile.
ModelSpec make_model(const ModelRequest& request);

struct CatalogEntry {
  std::string role;  // "b0", "b1" or "sigma"
  std::string name;
  std::string formula;
  std::vector<std::string> params;
  std::string declared_constants;
};

/// The compiled catalog. To add an entry: extend the matching *Kind enum,
/// the switch in the eval_* functions, make_model() and this listing, then
/// add the entry to the audit test so its declared constants are certified.
const std::vector<CatalogEntry>& catalog();

void eval_b0(const ModelSpec& model, std::span<const double> x, std::span<double> out);
std::vector<double> eval_b0(const ModelSpec& model, std::span<const double> x);

void eval_b1(const ModelSpec& model, std::span<const double> x,
             std::span<const double> y, std::span<double> out);
std::vector<double> eval_b1(const ModelSpec& model, std::span<const double> x,
                            std::span<const double> y);

/// sigma(x) as a dim x noise_dim row-major matrix.
void eval_sigma(const ModelSpec& model, std::span<const double> x, std::span<double> out);
std::vector<double> eval_sigma(const ModelSpec& model, std::span<const double> x);

/// out += sigma(x) dB.
void add_sigma_times(const ModelSpec& model, std::span<const double> x,
                     std::span<const double> dB, std::span<double> out);

/// Vectorized b0 over n row-major points.
void eval_b0_rows(const ModelSpec& model, std::span<const double> points,
                  std::span<double> out);

struct AuditReport {
  std::size_t checked_pairs = 0;
  /// max over sampled pairs of <x - y, b0(x) - b0(y)> minus the profile bound
  double worst_violation = 0.0;
  double lipschitz_b1_estimate = 0.0;
  /// max of 0.5 ||sigma(x) - sigma(y)||_HS^2 - K_sigma |x - y|^2
  double sigma_violation = 0.0;
  bool passed = false;
};

/// Sampling audit of the model hypotheses: uniform pairs in [-box, box]^d,
/// antithetic near-diagonal pairs and pairs at log-uniform separations.
/// Evidence, not proof. Throws std::domain_error when a drift evaluation is
/// not finite.
AuditReport audit_assumptions(const ModelSpec& model, std::size_t sample_count,
                              double box_radius, std::uint64_t rng_seed,
                              double tolerance = 1e-9);

}  // namespace chaosbench::model
