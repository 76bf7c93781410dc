#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chaosbench/model.hpp"
#include "chaosbench/rng.hpp"

using namespace chaosbench;
using model::DissipativityProfile;

namespace {

model::ModelSpec make(const std::string& b0, model::ParamMap b0p, const std::string& b1,
                      model::ParamMap b1p, const std::string& sigma = "zero",
                      model::ParamMap sp = {}, int dim = 1, double alpha = 2.0) {
  model::ModelRequest r;
  r.dim = dim;
  r.alpha = alpha;
  r.b0 = {b0, std::move(b0p)};
  r.b1 = {b1, std::move(b1p)};
  r.sigma = {sigma, std::move(sp)};
  return model::make_model(r);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("gamma profile values at the breakpoints") {
    const DissipativityProfile p{1.0, 2.0, 1.0};
    CHECK(model::gamma_profile(1.0, p) == doctest::Approx(1.0));
    CHECK(model::gamma_profile(2.0, p) == doctest::Approx(-4.0));
    CHECK(model::gamma_profile(3.0, p) == doctest::Approx(-6.0));
    CHECK(model::gamma_profile(0.0, p) == 0.0);
  }

  TEST_CASE("gamma profile is continuous, below K1 r, and -K2 r beyond 2R") {
    Stream rng(StreamKey{1, StreamRole::generic, 0, 0});
    for (int trial = 0; trial < 50; ++trial) {
      DissipativityProfile p;
      p.K1 = 3.0 * rng.uniform();
      p.K2 = 0.1 + 3.0 * rng.uniform();
      p.R = 0.1 + 2.0 * rng.uniform();
      for (double bp : {p.R, 2.0 * p.R}) {
        const double lo = model::gamma_profile(bp * (1.0 - 1e-12), p);
        const double hi = model::gamma_profile(bp * (1.0 + 1e-12), p);
        CHECK(std::abs(lo - hi) < 1e-9 * (1.0 + std::abs(lo)));
      }
      for (int k = 0; k <= 400; ++k) {
        const double r = 4.0 * p.R * k / 400.0;
        REQUIRE(model::gamma_profile(r, p) <= p.K1 * r + 1e-12);
        if (r > 2.0 * p.R) REQUIRE(model::gamma_profile(r, p) == doctest::Approx(-p.K2 * r));
      }
    }
  }

  TEST_CASE("R = 0 is purely dissipative") {
    const DissipativityProfile p{0.0, 1.5, 0.0};
    CHECK(p.problems().empty());
    CHECK(model::gamma_profile(0.7, p) == doctest::Approx(-1.05));
  }

  TEST_CASE("profile validation names every violated invariant") {
    DissipativityProfile p;
    p.K2 = -1.0;
    p.R = -0.5;
    p.beta = 0.0;
    CHECK(p.problems().size() == 3);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    DissipativityProfile q;
    q.alpha = 2.5;
    CHECK(q.problems().size() == 1);
    q.alpha = 1.0;
    CHECK(q.problems().size() == 1);
    // beta is unused by stable noise.
    q.alpha = 1.5;
    q.beta = 0.0;
    CHECK(q.problems().empty());
  }

  TEST_CASE("drift, interaction and diffusion evaluations") {
    const auto cubic = make("cubic", {}, "curie-weiss", {{"K_b", 1.0}});
    CHECK(model::eval_b0(cubic, std::vector<double>{2.0})[0] == doctest::Approx(-6.0));
    CHECK(model::eval_b1(cubic, std::vector<double>{1.0}, std::vector<double>{0.0})[0] ==
          doctest::Approx(-1.0));
    for (const char* name : {"linear", "cubic", "radial-cubic"}) {
      const auto m = make(name, std::string(name) == "linear" ? model::ParamMap{{"kappa", 2.0}}
                                                              : model::ParamMap{},
                          "zero", {});
      CHECK(model::eval_b0(m, std::vector<double>{0.0})[0] == 0.0);
    }
    const auto rc = make("radial-cubic", {}, "zero", {}, "zero", {}, 2);
    const auto v = model::eval_b0(rc, std::vector<double>{1.0, 1.0});
    CHECK(v[0] == doctest::Approx(-1.0));
    CHECK(v[1] == doctest::Approx(-1.0));

    const auto noisy = make("linear", {{"kappa", 1.0}}, "zero", {}, "constant", {{"scale", 0.5}}, 2);
    CHECK(noisy.noise_dim() == 2);
    const auto s = model::eval_sigma(noisy, std::vector<double>{3.0, -1.0});
    CHECK(s == std::vector<double>{0.5, 0.0, 0.0, 0.5});
    std::vector<double> out{1.0, 1.0};
    model::add_sigma_times(noisy, std::vector<double>{0.0, 0.0}, std::vector<double>{2.0, 4.0}, out);
    CHECK(out == std::vector<double>{2.0, 3.0});
    CHECK(make("linear", {{"kappa", 1.0}}, "zero", {}).noise_dim() == 0);
  }

  TEST_CASE("evaluations are pure") {
    const auto m = make("cubic", {}, "bounded-tanh", {{"K_b", 0.3}}, "scalar-tanh",
                        {{"scale", 1.0}, {"slope", 0.2}});
    const std::vector<double> x{0.37}, y{-1.2};
    CHECK(model::eval_b0(m, x) == model::eval_b0(m, x));
    CHECK(model::eval_b1(m, x, y) == model::eval_b1(m, x, y));
    CHECK(model::eval_sigma(m, x) == model::eval_sigma(m, x));
  }

  TEST_CASE("vectorized drift matches the pointwise one") {
    const auto m = make("radial-cubic", {}, "zero", {}, "zero", {}, 3);
    std::vector<double> pts(30), out(30);
    Stream rng(StreamKey{4, StreamRole::generic, 0, 0});
    for (auto& p : pts) p = rng.normal();
    model::eval_b0_rows(m, pts, out);
    for (std::size_t i = 0; i < 10; ++i) {
      const auto one = model::eval_b0(m, std::span<const double>(pts).subspan(3 * i, 3));
      for (int k = 0; k < 3; ++k) CHECK(out[3 * i + k] == one[k]);
    }
  }

  TEST_CASE("make_model rejects unknown names, missing and unknown parameters") {
    CHECK_THROWS_AS(make("quartic", {}, "zero", {}), std::invalid_argument);
    CHECK_THROWS_AS(make("linear", {{"kappa", -1.0}}, "zero", {}), std::invalid_argument);
    CHECK(make("linear", {}, "zero", {}).b0.kappa == 1.0);
    CHECK_THROWS_AS(make("linear", {{"kappa", 1.0}, {"foo", 2.0}}, "zero", {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(make("cubic", {}, "zero", {}, "zero", {}, 2), std::invalid_argument);
    CHECK_THROWS_AS(make("linear", {{"kappa", 1.0}}, "zero", {}, "identity", {}, 1, 1.5),
                    std::invalid_argument);
  }

  TEST_CASE("every catalog combination passes its audit at the declared constants") {
    for (int dim : {1, 2}) {
      for (const char* b0 : {"linear", "cubic", "radial-cubic"}) {
        if (dim > 1 && std::string(b0) == "cubic") continue;
        for (const char* b1 : {"zero", "curie-weiss", "bounded-tanh"}) {
          for (const char* sigma : {"zero", "identity", "constant", "scalar-tanh"}) {
            model::ParamMap b0p, b1p, sp;
            if (std::string(b0) == "linear") b0p = {{"kappa", 0.7}};
            if (std::string(b1) != "zero") b1p = {{"K_b", 0.4}};
            if (std::string(sigma) == "constant") sp = {{"scale", 2.0}};
            if (std::string(sigma) == "scalar-tanh") sp = {{"scale", 1.0}, {"slope", 0.3}};
            const auto m = make(b0, b0p, b1, b1p, sigma, sp, dim);
            const auto audit = model::audit_assumptions(m, 4000, 6.0, 11);
            INFO(m.id());
            CHECK(audit.passed);
            CHECK(audit.worst_violation <= 1e-9);
            CHECK(audit.sigma_violation <= 1e-9);
            CHECK(audit.lipschitz_b1_estimate <= m.profile.K_b + 1e-9);
          }
        }
      }
    }
  }

  TEST_CASE("the stable-case audit passes for the cubic drift") {
    const auto m = make("cubic", {}, "zero", {}, "zero", {}, 1, 1.5);
    CHECK(model::audit_assumptions(m, 4000, 6.0, 3).passed);
  }

  TEST_CASE("linear drift has no dissipativity slack to spare") {
    const auto m = make("linear", {{"kappa", 1.3}}, "zero", {});
    const auto audit = model::audit_assumptions(m, 2000, 5.0, 5);
    CHECK(audit.passed);
    CHECK(std::abs(audit.worst_violation) < 1e-9);
  }

  TEST_CASE("an overstated profile fails the audit") {
    model::ModelRequest r;
    r.b0 = {"cubic", {}};
    r.K1 = 0.5;  // the cubic drift expands at rate 1 near the origin
    const auto m = model::make_model(r);
    const auto audit = model::audit_assumptions(m, 4000, 3.0, 7);
    CHECK_FALSE(audit.passed);
    CHECK(audit.worst_violation > 0.0);
  }

  TEST_CASE("the audit is deterministic given its seed") {
    const auto m = make("cubic", {}, "bounded-tanh", {{"K_b", 0.2}});
    const auto a = model::audit_assumptions(m, 1000, 4.0, 99);
    const auto b = model::audit_assumptions(m, 1000, 4.0, 99);
    CHECK(a.worst_violation == b.worst_violation);
    CHECK(a.lipschitz_b1_estimate == b.lipschitz_b1_estimate);
  }

  TEST_CASE("the catalog lists every entry once") {
    const auto& cat = model::catalog();
    CHECK(cat.size() == 10);
    for (const auto& e : cat) CHECK_FALSE(e.formula.empty());
  }
}
