#include <cmath>

#include "doctest.h"
#include "modgrad/errors.hpp"
#include "modgrad/gallery.hpp"
#include "modgrad/stability.hpp"

using namespace modgrad;

namespace {

using EcKind = EcVerdict::Kind;

CriticalPoint at(const System& s, Vec x) { return describe_critical_point(s.field(), x); }

}  // namespace

TEST_CASE("ec: ex21 path converges") {
  const auto e = example_2_1();
  const auto v = ec_check(e.system.matrix(), 1e4);
  CHECK(v.kind == EcKind::ConvergentLikely);
  // Oracle: antiderivative of (t+1)^-2 gives 1 - 1/(T+1).
  CHECK(v.horizon_integral == doctest::Approx(1.0 - 1.0 / 10001.0).epsilon(1e-8));
  REQUIRE(v.tail_exponent.has_value());
  CHECK(*v.tail_exponent == doctest::Approx(2.0).epsilon(0.01));
  CHECK_FALSE(v.clipped);
  CHECK_FALSE(v.evidence.empty());
}

TEST_CASE("ec: identity diverges with I(T) = T") {
  const auto v = ec_check(MatrixPath::identity(3), 1e4);
  CHECK(v.kind == EcKind::DivergentLikely);
  CHECK(v.horizon_integral == doctest::Approx(1e4).epsilon(1e-12));
  CHECK(v.half_integral == doctest::Approx(5e3).epsilon(1e-12));
}

TEST_CASE("ec: harmonic decay diverges") {
  const auto v = ec_check_lambda([](double t) { return 1.0 / (t + 1.0); }, 1e4);
  CHECK(v.kind == EcKind::DivergentLikely);
  CHECK(v.horizon_integral == doctest::Approx(std::log(10001.0)).epsilon(1e-8));
}

TEST_CASE("property: ec verdicts on power-law decay at horizon 1e6") {
  for (double p : {0.5, 0.9, 1.0}) {
    CAPTURE(p);
    const auto v = ec_check_lambda([p](double t) { return std::pow(t + 1.0, -p); }, 1e6);
    CHECK(v.kind == EcKind::DivergentLikely);
    // Oracle: closed-form antiderivative.
    const double want = p == 1.0 ? std::log(1e6 + 1.0) : (std::pow(1e6 + 1.0, 1.0 - p) - 1.0) / (1.0 - p);
    CHECK(v.horizon_integral == doctest::Approx(want).epsilon(1e-7));
  }
  for (double p : {1.1, 2.0}) {
    CAPTURE(p);
    const auto v = ec_check_lambda([p](double t) { return std::pow(t + 1.0, -p); }, 1e6);
    CHECK(v.kind == EcKind::ConvergentLikely);
  }
}

TEST_CASE("ec: vanishing tail, clipping and bad horizon") {
  const auto v = ec_check_lambda([](double t) { return std::max(0.0, 1.0 - t / 10.0); }, 1e3);
  CHECK(v.kind == EcKind::ConvergentLikely);
  CHECK(v.horizon_integral == doctest::Approx(5.0).epsilon(1e-8));
  CHECK(v.tail_exponent == INFINITY);
  const auto c = ec_check_lambda([](double) { return -1e-12; }, 1e3);
  CHECK(c.clipped);
  CHECK(c.horizon_integral >= 0.0);
  CHECK_THROWS_AS(ec_check(MatrixPath::identity(2), 50.0), DomainError);
}

TEST_CASE("certify: ex21 is uniformly stable only") {
  const auto e = example_2_1();
  const auto r = certify(e.system, at(e.system, {1, 1}));
  CHECK(r.h1.pass);
  CHECK(r.h2.kind == IsolationVerdict::Kind::IsolatedEvidence);
  CHECK(r.h3.kind == EcKind::ConvergentLikely);
  CHECK(r.descent.ok);
  CHECK(r.descent.trajectories == 8);
  CHECK(r.conclusion == Conclusion::UniformlyStable);
}

TEST_CASE("certify: ex31 maxima are uniformly asymptotically stable, the saddle is not certified") {
  const auto e = example_3_1();
  for (const auto& k : e.critical_set) {
    const auto r = certify(e.system, at(e.system, k.location));
    if (k.kind == "max") {
      CHECK(r.h1.pass);
      CHECK(r.h2.kind == IsolationVerdict::Kind::IsolatedEvidence);
      CHECK(r.h3.kind == EcKind::DivergentLikely);
      CHECK(r.descent.ok);
      CHECK(r.conclusion == Conclusion::UniformlyAsymptoticallyStable);
    } else {
      CHECK_FALSE(r.h1.pass);
      CHECK(r.conclusion == Conclusion::NoCertificate);
    }
  }
}

TEST_CASE("certify: ex22 origin is stable but not isolated") {
  const auto e = example_2_2();
  const auto r = certify(e.system, at(e.system, {0, 0}));
  CHECK(r.h1.pass);
  CHECK(r.h2.kind == IsolationVerdict::Kind::NotIsolated);
  CHECK(r.h3.kind == EcKind::DivergentLikely);
  CHECK(r.conclusion == Conclusion::UniformlyStable);
}

TEST_CASE("certify: a minimum gets no certificate") {
  const ScalarField f(Expression::parse("x1^2 + x2^2", 2, false), Box({{-1, 1}, {-1, 1}}));
  const System s(f, MatrixPath::identity(2));
  const auto r = certify(s, at(s, {0, 0}));
  CHECK_FALSE(r.h1.pass);
  CHECK(r.conclusion == Conclusion::NoCertificate);
}

TEST_CASE("certify: a degenerate maximum is not certified from the Hessian") {
  const ScalarField f(Expression::parse("-x1^4 - x2^4", 2, false), Box({{-1, 1}, {-1, 1}}));
  const System s(f, MatrixPath::identity(2));
  const auto cp = at(s, {0, 0});
  CHECK(cp.classification == Classification::Degenerate);
  const auto r = certify(s, cp);
  CHECK_FALSE(r.h1.pass);
  CHECK(r.conclusion == Conclusion::NoCertificate);
}

TEST_CASE("certify: shell probes reject a Hessian maximum that is beaten nearby") {
  // Hessian diag(-2, -0.002) is negative definite, but f > f(0) at x2 = 0.1.
  const ScalarField f(Expression::parse("-x1^2 - 0.001*x2^2 + x2^4", 2, false), Box({{-1, 1}, {-1, 1}}));
  const System s(f, MatrixPath::identity(2));
  const auto cp = at(s, {0, 0});
  CHECK(cp.classification == Classification::IsolatedLocalMax);
  const auto r = certify(s, cp);
  CHECK_FALSE(r.h1.pass);
  CHECK(r.h1.min_drop < 0.0);
  CHECK(r.conclusion == Conclusion::NoCertificate);
}

TEST_CASE("property: stronger evidence keeps the asymptotic conclusion") {
  const auto e = example_3_1();
  const auto cp = at(e.system, {2, 1});
  CertifyOptions tight;
  tight.ec_horizon = 1e6;
  tight.quad_tol = 1e-10;
  tight.ode.rel_tol = 1e-11;
  tight.ode.abs_tol = 1e-14;
  tight.samples_per_shell = 128;
  const auto base = certify(e.system, cp);
  const auto strong = certify(e.system, cp, tight);
  CHECK(base.conclusion == Conclusion::UniformlyAsymptoticallyStable);
  CHECK(strong.conclusion == base.conclusion);
}

TEST_CASE("property: descent trajectories obey the pointwise bound for every certified system") {
  for (auto id : {GalleryId::Ex21, GalleryId::Ex22, GalleryId::Ex31}) {
    const auto e = gallery_entry(id);
    for (const auto& k : e.critical_set) {
      if (k.kind != "max") continue;
      const auto r = certify(e.system, at(e.system, k.location));
      CHECK(r.descent.max_bound_excess <= kBoundSlack);
      CHECK(r.descent.max_increase <= kMonotoneSlack);
      CHECK(r.descent.start_times.size() == r.descent.trajectories);
    }
  }
}

TEST_CASE("uniformity spot check: descent holds from start times 0, 1 and 10") {
  const auto e = example_2_1();
  CertifyOptions o;
  o.descent_trajectories = 3;
  const auto r = certify(e.system, at(e.system, {1, 1}), o);
  CHECK(r.descent.start_times == std::vector<double>{0.0, 1.0, 10.0});
  CHECK(r.descent.passed == 3);
}
