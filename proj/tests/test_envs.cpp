#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cbfpa/envs.hpp"

using namespace cbfpa;

TEST_CASE("cartpole_step") {
  const CartpoleParams p;
  SUBCASE("zero state and zero input stay at rest") {
    const Eigen::Vector4d next = cartpole_step(p, Eigen::Vector4d::Zero(), 0.0);
    CHECK(next.norm() == 0.0);
  }
  SUBCASE("committed oracle values for u = 1 from rest") {
    // Second-implementation oracle values (exact rationals -600/41, 400/41).
    const Eigen::Vector4d next = cartpole_step(p, Eigen::Vector4d::Zero(), 1.0);
    CHECK(next[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(next[1] - 0.48780487804878048) < 1e-15);
    CHECK(next[2] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(next[3] - -0.73170731707317072) < 1e-15);
  }
  SUBCASE("committed oracle values after two steps") {
    Eigen::Vector4d s = Eigen::Vector4d::Zero();
    s = cartpole_step(p, s, 1.0);
    s = cartpole_step(p, s, 1.0);
    CHECK(std::abs(s[0] - 0.024390243902439025) < 1e-15);
    CHECK(std::abs(s[1] - 0.97560975609756095) < 1e-14);
    CHECK(std::abs(s[2] - -0.036585365853658534) < 1e-15);
    CHECK(std::abs(s[3] - -1.4634146341463414) < 1e-14);
  }
  SUBCASE("committed oracle values from a tilted state") {
    Eigen::Vector4d s;
    s << 0.1, -0.5, 0.2, 0.3;
    const Eigen::Vector4d next = cartpole_step(p, s, -0.7);
    CHECK(std::abs(next[0] - 0.075000000000000011) < 1e-15);
    CHECK(std::abs(next[1] - -0.84739755198683397) < 1e-12);
    CHECK(std::abs(next[2] - 0.21500000000000002) < 1e-15);
    CHECK(std::abs(next[3] - 0.95673105302361194) < 1e-12);
  }
  SUBCASE("input saturation is recorded") {
    bool saturated = false;
    cartpole_step(p, Eigen::Vector4d::Zero(), 1.7, &saturated);
    CHECK(saturated);
    cartpole_step(p, Eigen::Vector4d::Zero(), 0.7, &saturated);
    CHECK(!saturated);
  }
  SUBCASE("energy drift shrinks linearly with dt") {
    // Frictionless and unforced, the dynamics conserve total mechanical
    // energy; the Euler drift over a fixed time window is O(dt).
    auto energy = [&](const Eigen::Vector4d& s, const CartpoleParams& cp) {
      const double vx = s[1], th = s[2], om = s[3];
      const double vpx = vx + cp.l * om * std::cos(th);
      const double vpy = cp.l * om * std::sin(th);
      const double i_cm = cp.m_p * (2.0 * cp.l) * (2.0 * cp.l) / 12.0;
      return 0.5 * cp.m_c * vx * vx + 0.5 * cp.m_p * (vpx * vpx + vpy * vpy) +
             0.5 * i_cm * om * om + cp.m_p * cp.g * cp.l * std::cos(th);
    };
    auto drift = [&](double dt) {
      CartpoleParams cp;
      cp.dt = dt;
      Eigen::Vector4d s;
      s << 0.0, 0.0, 0.1, 0.0;
      const double e0 = energy(s, cp);
      const int steps = static_cast<int>(std::round(1.0 / dt));
      for (int k = 0; k < steps; ++k) s = cartpole_step(cp, s, 0.0);
      return std::abs(energy(s, cp) - e0);
    };
    const double d_coarse = drift(0.05);
    const double d_fine = drift(0.005);
    const double ratio = d_coarse / d_fine;
    CHECK(ratio > 3.0);
    CHECK(ratio < 30.0);
  }
}

TEST_CASE("cartpole costs") {
  Eigen::Vector4d s = Eigen::Vector4d::Zero();
  SUBCASE("upright band pays -1") {
    s[2] = 0.1;
    CHECK(cartpole_costs(s, 0.0).first == -1.0);
    s[2] = 0.2095;
    CHECK(cartpole_costs(s, 0.0).first == -1.0);  // inclusive boundary
  }
  SUBCASE("outside the band and at the goal both costs vanish") {
    s << 2.0, 0.0, 0.21, 0.0;
    const auto [orig, add] = cartpole_costs(s, 0.0);
    CHECK(orig == 0.0);
    CHECK(add == 0.0);
  }
  SUBCASE("additional cost arithmetic") {
    s << 0.0, 1.0, 0.0, 0.0;
    CHECK(cartpole_costs(s, 0.0).second == doctest::Approx(0.401).epsilon(1e-15));
  }
  SUBCASE("baseline compositions") {
    s << 2.0, 0.0, 0.0, 0.0;
    {
      const auto [morl, bc] = cartpole_baseline_costs(s, 0.0, 0.3, 0.3, 0.0);
      CHECK(morl == -1.0);  // w = 0 reduces to the original cost
      CHECK(bc == 0.0);
    }
    {
      const auto [morl, bc] = cartpole_baseline_costs(s, 0.0, 0.55, 0.05, 1.0);
      CHECK(morl == -1.0);
      CHECK(bc == doctest::Approx(0.25).epsilon(1e-12));
    }
    {  // matched outputs leave only the additional cost
      s << 0.0, 1.0, 0.0, 0.0;
      const auto [morl, bc] = cartpole_baseline_costs(s, 0.0, 0.4, 0.4, 2.0);
      CHECK(bc == doctest::Approx(0.401).epsilon(1e-15));
      CHECK(morl == doctest::Approx(-1.0 + 2.0 * 0.401).epsilon(1e-15));
    }
  }
}

TEST_CASE("unicycle_step") {
  UnicycleParams p;
  SUBCASE("pure forward motion along the heading") {
    Eigen::Vector3d s(0, 0, 0);
    const Eigen::Vector3d next = unicycle_step(p, s, {1.0, 0.0});
    CHECK(next[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(next[1] == 0.0);
    CHECK(next[2] == 0.0);
  }
  SUBCASE("heading pi/2 moves along y") {
    Eigen::Vector3d s(0, 0, M_PI / 2.0);
    const Eigen::Vector3d next = unicycle_step(p, s, {1.0, 0.0});
    CHECK(next[1] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(next[0]) < 1e-15);
  }
  SUBCASE("committed oracle values after 10 steps of (0.5, 1.0)") {
    Eigen::Vector3d s(0, 0, 0);
    for (int k = 0; k < 10; ++k) s = unicycle_step(p, s, {0.5, 1.0});
    CHECK(std::abs(s[0] - 0.43187726339750643) < 1e-12);
    CHECK(std::abs(s[1] - 0.20862049980879077) < 1e-12);
    CHECK(std::abs(s[2] - 0.99999999999999989) < 1e-12);
  }
  SUBCASE("heading wraps into [-pi, pi]") {
    Eigen::Vector3d s(0, 0, 3.0);
    for (int k = 0; k < 50; ++k) {
      s = unicycle_step(p, s, {0.2, 3.0});
      CHECK(s[2] <= M_PI);
      CHECK(s[2] >= -M_PI);
    }
  }
  SUBCASE("inputs saturate to their boxes") {
    Eigen::Vector3d s(0, 0, 0);
    const Eigen::Vector3d next = unicycle_step(p, s, {5.0, 0.0});
    CHECK(next[0] == doctest::Approx(p.dt * p.v_max).epsilon(1e-15));
  }
}

TEST_CASE("unicycle costs") {
  UnicycleParams p;
  SUBCASE("collision with obstacle 1 at its center") {
    Eigen::Vector3d s(-0.5, 0.0, 0.0);
    const auto [orig, add] = unicycle_costs(p, s, UnicycleTask::AvoidOnly);
    CHECK(orig == doctest::Approx(99.75).epsilon(1e-15));
    CHECK(add == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("collision threshold is inclusive at 0.595") {
    Eigen::Vector3d on(-0.5 + 0.595, 0.0, 0.0);
    CHECK(unicycle_costs(p, on, UnicycleTask::AvoidOnly).first > 50.0);
    Eigen::Vector3d off(-0.5 + 0.5951, 0.0, 0.0);
    CHECK(unicycle_costs(p, off, UnicycleTask::AvoidOnly).first < 0.0);
  }
  SUBCASE("zero additional cost at the goal") {
    Eigen::Vector3d s(1.5, 0.0, 0.0);
    CHECK(unicycle_costs(p, s, UnicycleTask::AvoidOnly).second == 0.0);
  }
  SUBCASE("second obstacle adds 10 inside 0.42 m") {
    Eigen::Vector3d s(0.5, 0.2, 0.0);
    const auto [orig, add] = unicycle_costs(p, s, UnicycleTask::TwoObstacles);
    CHECK(add == doctest::Approx(11.019803902718557).epsilon(1e-14));
    // same state without the second obstacle in play
    CHECK(unicycle_costs(p, s, UnicycleTask::AvoidOnly).second ==
          doctest::Approx(1.019803902718557).epsilon(1e-14));
    (void)orig;
  }
  SUBCASE("avoid-plus-goal composes the original task for the second stage") {
    Eigen::Vector3d s(1.0, 0.5, 0.0);
    const auto avoid = unicycle_costs(p, s, UnicycleTask::AvoidOnly);
    const auto staged = unicycle_costs(p, s, UnicycleTask::AvoidPlusGoal);
    CHECK(staged.first == doctest::Approx(avoid.first + avoid.second).epsilon(1e-15));
    CHECK(staged.second == avoid.second);
  }
}

TEST_CASE("environment reset determinism and distributions") {
  SUBCASE("same seed gives identical states") {
    CartpoleEnv cart;
    CHECK(cart.reset(123).x == cart.reset(123).x);
    UnicycleEnv uni;
    CHECK(uni.reset(9).x == uni.reset(9).x);
  }
  SUBCASE("cartpole resets stay inside the stated box") {
    CartpoleEnv cart;
    double lo = 1.0, hi = -1.0;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      const EnvState st = cart.reset(s);
      for (int i = 0; i < 4; ++i) {
        lo = std::min(lo, st.x[i]);
        hi = std::max(hi, st.x[i]);
        CHECK(st.x[i] >= -0.05);
        CHECK(st.x[i] <= 0.05);
      }
    }
    CHECK(lo < -0.045);  // the box is actually filled
    CHECK(hi > 0.045);
  }
  SUBCASE("unicycle reset means match box midpoints within 3 sigma") {
    UnicycleEnv uni;
    const double lo[3] = {-1.9, -0.2, -0.2};
    const double hi[3] = {1.5, 0.2, 0.2};
    const int n = 10000;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int s = 0; s < n; ++s) mean += Eigen::Vector3d(uni.reset(s).x);
    mean /= n;
    for (int i = 0; i < 3; ++i) {
      const double mid = 0.5 * (lo[i] + hi[i]);
      const double sigma = (hi[i] - lo[i]) / std::sqrt(12.0);
      CHECK(std::abs(mean[i] - mid) <= 3.0 * sigma / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("episode mechanics") {
  SUBCASE("zero policy falls over in finitely many steps") {
    CartpoleEnv cart;
    EnvState s;
    s.x = Vector(4);
    s.x << 0.01, 0.0, 0.02, 0.0;
    Vector u = Vector::Zero(1);
    int steps = 0;
    while (!s.terminal && steps < 100000) {
      s = cart.step(s, u).next;
      ++steps;
    }
    CHECK(s.terminal);
    CHECK(s.reason == TerminationReason::BoundViolation);
    CHECK(steps < cart.params().horizon);
  }
  SUBCASE("horizon reached flags the terminal reason") {
    CartpoleParams p;
    p.horizon = 5;
    CartpoleEnv cart(p);
    EnvState s = cart.reset(1);
    Vector u = Vector::Zero(1);
    int steps = 0;
    while (!s.terminal && steps < 100) {
      s = cart.step(s, u).next;
      ++steps;
    }
    CHECK(steps == 5);
    CHECK(s.reason == TerminationReason::HorizonReached);
  }
  SUBCASE("unicycle positions may exit bounds only on the terminal step") {
    UnicycleEnv uni;
    EnvState s;
    s.x = Vector(3);
    s.x << 2.3, 0.0, 0.0;
    Vector u(2);
    u << 1.0, 0.0;  // drive straight at the wall
    int exits = 0;
    while (!s.terminal) {
      s = uni.step(s, u).next;
      if (s.x[0] > uni.params().x_max) {
        ++exits;
        CHECK(s.terminal);
      }
    }
    CHECK(exits == 1);
    CHECK(s.reason == TerminationReason::BoundViolation);
  }
}
