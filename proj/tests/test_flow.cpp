#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "kolmo/flow.hpp"
#include "oracles.hpp"

using namespace kolmo;

TEST_SUITE("flow") {
  TEST_CASE("equilibrium start stays put") {
    const ModelParams p(1.0, 0.0, Vec3{});
    const TrajectoryRecord r = integrate_flow(p, State3{1, 0, 0}, 5.0);
    for (const auto& x : r.states) CHECK(norm(x - State3{1, 0, 0}) == 0.0);
  }

  TEST_CASE("norm relaxes monotonically to the sphere") {
    const ModelParams p(1.0, 0.0, Vec3{});
    const TrajectoryRecord r = integrate_flow(p, State3{2, 2, 2}, 10.0);
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(norm(r.states[i]) <= norm(r.states[i - 1]));
    CHECK(std::abs(sphere_residual(r.back())) < 1e-6);
  }

  TEST_CASE("global attraction bound from inside and outside") {
    const ModelParams p(0.7, 0.0, Vec3{0.2, -0.1, 0.4});
    for (const State3& x0 : {State3{0.05, 0.06, 0.07}, State3{4, 5, 6}}) {
      const double T = 30.0;
      const State3 xT = flow_at(p, x0, T);
      // Witness rate c^2 = min |x|^2 along the run.
      const TrajectoryRecord r = integrate_flow(p, x0, T);
      double c2 = INFINITY;
      for (const auto& x : r.states) c2 = std::min(c2, norm2(x));
      CHECK(std::abs(sphere_residual(xT)) <= std::abs(sphere_residual(x0)) * std::exp(-2 * 0.7 * c2 * T) * 1.01 + 1e-12);
    }
  }

  TEST_CASE("first integral conserved along the flow") {
    const ModelParams p(1.0, 0.0, Vec3{});
    const State3 x0{0.3, 0.4, 0.5};
    const TrajectoryRecord r = integrate_flow(p, x0, 50.0);
    const double h0 = oracle::h1(1.0, Vec3{}, x0);
    double worst = 0.0;
    for (const auto& x : r.states) worst = std::max(worst, std::abs(oracle::h1(1.0, Vec3{}, x) / h0 - 1.0));
    CHECK(worst < 1e-8);
    CHECK(r.drift_metric == "first_integral");
    CHECK(r.invariant_drift < 1e-8);
  }

  TEST_CASE("conservation over t in [0,100] for random interior starts") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> U(0.1, 2.0);
    for (const Vec3& d : {Vec3{0, 0, 0}, Vec3{0.5, -0.2, 0.3}, Vec3{-2, 0, -3}, Vec3{-1, -0.5, -1.5}})
      for (int k = 0; k < 3; ++k) {
        const ModelParams p(1.0, 0.0, d);
        const State3 x0{U(gen), U(gen), U(gen)};
        const TrajectoryRecord r = integrate_flow(p, x0, 100.0);
        CHECK(r.invariant_drift < 1e-6);
      }
  }

  TEST_CASE("equilibria of the census") {
    const ModelParams p1(1.0, 0.0, Vec3{});
    const EquilibriumSet e1 = equilibria(p1);
    REQUIRE(e1.isolated.size() == 5);
    const Equilibrium* q = e1.find("Qstar");
    REQUIRE(q != nullptr);
    for (int i = 0; i < 3; ++i) CHECK(q->point[i] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(equilibria(ModelParams(1.0, 0.0, Vec3{-2, 0, -3})).isolated.size() == 4);
    const EquilibriumSet e5 = equilibria(ModelParams(1.0, 0.0, Vec3{-1, -1, -1}));
    CHECK(e5.isolated.size() == 1);
    CHECK(e5.sphere);
    for (const Vec3& d : {Vec3{0, 0, 0}, Vec3{-2, 0, -3}, Vec3{0.5, -0.2, 0.3}, Vec3{-1, 0, 0}, Vec3{-1, -1, 0}}) {
      const ModelParams p(1.0, 0.0, d);
      const EquilibriumSet es = equilibria(p);
      for (const auto& e : es.isolated) CHECK(norm(drift(p, e.point)) <= 1e-10);
      for (const auto& c : es.curves)
        for (double th : {0.0, 0.3, 0.8, 1.2, M_PI / 2}) CHECK(norm(drift(p, c.point(th))) <= 1e-10);
    }
  }

  TEST_CASE("Qstar coordinates follow the reversed rate order") {
    const ModelParams p(1.0, 0.0, Vec3{1, 0, 0});  // m = (2, 1, 1)
    const auto q = qstar(p);
    REQUIRE(q.has_value());
    CHECK((*q)[0] == doctest::Approx(std::sqrt(1.0 / 4.0)));
    CHECK((*q)[1] == doctest::Approx(std::sqrt(1.0 / 4.0)));
    CHECK((*q)[2] == doctest::Approx(std::sqrt(2.0 / 4.0)));
  }

  TEST_CASE("eigenvalue closed forms") {
    const ModelParams p(1.0, 0.0, Vec3{0.5, -0.2, 0.3});
    const Eigen3 e = eigenvalues_at(p, "e1");
    const auto s = oracle::sorted(e);
    CHECK(s[0].real() == doctest::Approx(-2.0));
    CHECK(s[1].real() == doctest::Approx(-0.8));
    CHECK(s[2].real() == doctest::Approx(1.5));
    const ModelParams p0(1.0, 0.0, Vec3{});
    const auto qs = oracle::sorted(eigenvalues_at(p0, "Qstar"));
    CHECK(qs[0].real() == doctest::Approx(-2.0));
    CHECK(std::abs(qs[1] - std::complex<double>(0, -2 / std::sqrt(3.0))) < 1e-12);
    CHECK(std::abs(qs[2] - std::complex<double>(0, 2 / std::sqrt(3.0))) < 1e-12);
    CHECK(lambda_qstar(p0) == doctest::Approx(2 / std::sqrt(3.0)));
    for (const Vec3& d : {Vec3{}, Vec3{0.5, -0.2, 0.3}, Vec3{-3, 2, 1}}) {
      const auto o = eigenvalues_at(ModelParams(1.7, 0.0, d), "O");
      for (const auto& z : o) CHECK(z == std::complex<double>(1.7, 0.0));
    }
    CHECK_THROWS_AS(eigenvalues_at(p, "nope"), DomainError);
  }

  TEST_CASE("eigenvalues agree with a numerical solver") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> U(-2.5, 2.5);
    for (int k = 0; k < 40; ++k) {
      const ModelParams p(1.0 + 0.5 * (k % 3), 0.0, Vec3{U(gen), U(gen), U(gen)});
      for (const auto& e : equilibria(p).isolated)
        CHECK(oracle::max_eig_mismatch(e.eigenvalues, oracle::eigenvalues(jacobian(p, e.point))) < 1e-8);
    }
  }

  TEST_CASE("first integral, h* and cone level") {
    const ModelParams p(1.0, 0.0, Vec3{});
    CHECK(first_integral(p, State3{1, 1, 1}) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(h_star(p) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(h_star(ModelParams(1.0, 0.0, Vec3{0.7, 0.7, 0.7})) == doctest::Approx(3.0).epsilon(1e-14));
    const ModelParams pa(1.0, 0.0, Vec3{1, 0, 0});
    CHECK(std::abs(h_star(pa) - first_integral(pa, *qstar(pa))) < 1e-12);
    CHECK(std::abs(h_star(pa) - oracle::h1(1.0, Vec3{1, 0, 0}, *qstar(pa))) < 1e-12);
    const double q = 1.0 / std::sqrt(3.0);
    CHECK(cone_level(p, State3{2 * q, 2 * q, 2 * q}).h == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(cone_level(p, State3{2 * q, 2 * q, 2 * q}).on_qstar_ray);
    const State3 x{0.3, 0.4, 0.5};
    const double h = cone_level(p, x).h;
    for (double t : {1.0, 5.0, 20.0}) CHECK(first_integral(p, flow_at(p, x, t)) == doctest::Approx(h).epsilon(1e-9));
    CHECK_THROWS_AS(first_integral(p, State3{0, 1, 1}), DomainError);
  }

  TEST_CASE("H2 when the rates sum to zero") {
    const ModelParams p(1.0, 0.0, Vec3{0, -3, 0});  // m = (1, -2, 1)
    const State3 x0{0.4, 0.6, 0.5};
    const double h = first_integral(p, x0);
    const State3 x = flow_at(p, x0, 10.0, 1e-3);
    CHECK(first_integral(p, x) == doctest::Approx(h).epsilon(1e-8));
  }

  TEST_CASE("periodic orbit: return and level") {
    const ModelParams p(1.0, 0.0, Vec3{});
    for (double dh : {0.5, 2.0, 10.0}) {
      const double h = h_star(p) + dh;
      const double N = period_of_orbit(p, h);
      CHECK(N > 0.0);
      CHECK(std::isfinite(N));
      const State3 y0 = orbit_anchor(p, h);
      CHECK(oracle::h1(1.0, Vec3{}, y0) == doctest::Approx(h).epsilon(1e-8));
      const State3 back = flow_at(p, y0, N, 1e-3);
      CHECK(norm(back - y0) < 1e-6);
      const PeriodicOrbit orbit(p, h, 512);
      for (const auto& s : orbit.samples()) CHECK(std::abs(oracle::h1(1.0, Vec3{}, s) - h) < 1e-8);
      CHECK(orbit.distance(flow_at(p, y0, 0.37 * N, 1e-3)) < 1e-6);
    }
  }

  TEST_CASE("omega limits by regime") {
    const ModelParams p1(1.0, 0.0, Vec3{});
    const OmegaLimitClass c1 = omega_limit(p1, State3{1, 0.5, 0.2});
    CHECK(c1.kind == OmegaKind::periodic_orbit);
    CHECK(c1.h == doctest::Approx(first_integral(p1, State3{1, 0.5, 0.2})));
    CHECK(c1.numeric_agrees);
    const OmegaLimitClass c2 = omega_limit(ModelParams(1.0, 0.0, Vec3{-2, 0, -3}), State3{0.3, 0.4, 0.5});
    CHECK(c2.kind == OmegaKind::equilibrium);
    CHECK(c2.label == "e1");
    CHECK(c2.numeric_agrees);
    const OmegaLimitClass c5 = omega_limit(ModelParams(1.0, 0.0, Vec3{-1, -1, -1}), State3{2, 0, 0});
    CHECK(c5.kind == OmegaKind::equilibrium);
    CHECK(norm(c5.point - State3{1, 0, 0}) < 1e-12);
    CHECK(omega_limit(p1, State3{0, 0, 0}).kind == OmegaKind::origin);
  }

  TEST_CASE("omega limit classification agrees with long runs") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> U(0.1, 1.5);
    for (const Vec3& d : {Vec3{-2, 0, -3}, Vec3{-1, 0, 0}, Vec3{-1, -1, 0}, Vec3{-1, -1, -1}, Vec3{-0.5, -1.5, -2}}) {
      const ModelParams p(1.0, 0.0, d);
      int agree = 0;
      const int n = 20;
      for (int k = 0; k < n; ++k) agree += omega_limit(p, State3{U(gen), U(gen), U(gen)}).numeric_agrees ? 1 : 0;
      CHECK(agree >= n - 1);
    }
  }

  TEST_CASE("flow cursor is re-entrant") {
    const ModelParams p(1.0, 0.0, Vec3{0.5, -0.2, 0.3});
    FlowCursor c(p, State3{0.2, 0.5, 0.9}, 1e-2);
    const State3 a = c.at(7.3);
    const State3 b = c.at(1.1);
    CHECK(c.at(7.3) == a);
    CHECK(c.at(1.1) == b);
    CHECK(norm(a - flow_at(p, State3{0.2, 0.5, 0.9}, 7.3, 1e-2)) < 1e-12);
  }

  TEST_CASE("trajectory csv header") {
    const TrajectoryRecord r = integrate_flow(ModelParams(1.0, 0.0, Vec3{}), State3{0.5, 0.5, 0.5}, 0.1);
    std::ostringstream os;
    r.write_csv(os);
    CHECK(os.str().rfind("t,x1,x2,x3,H,L\n", 0) == 0);
  }
}
