#include <doctest.h>

#include <cmath>
#include <limits>

#include "nqkd/error.hpp"
#include "nqkd/ghz.hpp"
#include "nqkd/noise.hpp"

using namespace nqkd;

TEST_CASE("block count of gate patterns") {
  CHECK(block_count("1") == 1);
  CHECK(block_count("11") == 1);
  CHECK(block_count("01") == 2);
  CHECK(block_count("0101") == 4);
  CHECK(block_count("1101") == 3);
  CHECK_THROWS_AS(block_count(""), InvalidArgument);
  CHECK_THROWS_AS(block_count("1a"), InvalidArgument);
  const auto p = GatePattern::parse("110");
  CHECK(p.succeeded(1));
  CHECK_FALSE(p.succeeded(3));
  CHECK(p.to_string() == "110");
  CHECK(p.block_count() == 3);  // "1101"
  CHECK(p.prefactor() == doctest::Approx(0.125));
  CHECK(GatePattern::parse("111").prefactor() == 1.0);
}

TEST_CASE("probability arguments are checked") {
  CHECK_THROWS_AS(require_probability(-0.1, "f"), InvalidArgument);
  CHECK_THROWS_AS(require_probability(1.1, "f"), InvalidArgument);
  CHECK_THROWS_AS(require_probability(std::numeric_limits<double>::quiet_NaN(), "f"), InvalidArgument);
  CHECK_THROWS_AS(depolarized_state(3, 0.9), InvalidArgument);
  CHECK_NOTHROW(depolarized_state(3, max_depolarized_qber(3)));
}

TEST_CASE("star-network lambda pair against the dense circuit oracle values") {
  auto check = [](int n, double f, double plus, double minus) {
    const auto l = lambda0_star(n, f);
    CHECK(l.first == doctest::Approx(plus).epsilon(1e-13));
    CHECK(l.second == doctest::Approx(minus).epsilon(1e-13));
  };
  check(3, 0.1, 0.845, 0.035);
  check(3, 0.2, 0.705, 0.065);
  check(4, 0.1, 0.7718125, 0.0428125);
  CHECK(lambda0_star(5, 0.0).first == 1.0);
  CHECK(lambda0_star(5, 0.0).second == 0.0);
}

TEST_CASE("router-network lambda pair against the dense circuit oracle values") {
  auto check = [](int n, double f, double plus, double minus) {
    const auto l = lambda0_router(n, f);
    CHECK(l.first == doctest::Approx(plus).epsilon(1e-13));
    CHECK(l.second == doctest::Approx(minus).epsilon(1e-13));
  };
  check(3, 0.1, 0.8045, 0.0755);
  check(3, 0.2, 0.641, 0.129);
  check(4, 0.1, 0.7353625, 0.0792625);
}

TEST_CASE("pattern sum and weight-compact form agree") {
  for (int n = 2; n <= 20; ++n) {
    for (double f : {0.01, 0.1, 0.3, 0.7}) {
      const auto a = lambda0_star_pattern_sum(n, f);
      const auto b = lambda0_star_compact(n, f);
      CHECK(std::abs(a.first - b.first) <= 1e-12);
      CHECK(std::abs(a.second - b.second) <= 1e-12);
    }
  }
}

TEST_CASE("router and star share Q_Z; the X parity shrinks by 1 - f") {
  for (int n = 2; n <= 12; ++n) {
    for (double f : {0.0, 0.03, 0.1, 0.25}) {
      const auto s = lambda0_star(n, f);
      const auto r = lambda0_router(n, f);
      CHECK(std::abs(qber_from_lambda0(s) - qber_from_lambda0(r)) <= 1e-12);
      CHECK(std::abs((r.first - r.second) - (1.0 - f) * (s.first - s.second)) <= 1e-12);
    }
  }
}

TEST_CASE("order-averaged pairwise QBER") {
  CHECK(qab_average(4, 0.1) == doctest::Approx(0.0935).epsilon(1e-13));
  CHECK(qab_average(3, 0.0) == 0.0);
  // a single gate: Bob's qubit is randomized with probability f
  CHECK(qab_average(2, 0.2) == doctest::Approx(0.1));
}

TEST_CASE("dense preparation circuit reproduces the analytic model") {
  for (int n = 2; n <= 5; ++n) {
    for (double f : {0.05, 0.2}) {
      for (auto topo : {Topology::star, Topology::router}) {
        const auto rho = simulate_prep_circuit(n, {f, topo}, GateOrderSpec::all());
        const auto lam = ghz_diagonal_from_dense(rho);
        const auto l = lambda0(n, {f, topo});
        CHECK(std::abs(lam.lambda(0, Sign::plus) - l.first) <= 1e-10);
        CHECK(std::abs(lam.lambda(0, Sign::minus) - l.second) <= 1e-10);
        for (int b = 1; b < n; ++b) CHECK(std::abs(qber_pairwise(lam, b) - qab_average(n, f)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("a fixed gate order gives unequal pairwise QBERs") {
  const auto rho = simulate_prep_circuit(4, {0.1, Topology::star}, GateOrderSpec::fixed());
  CHECK(dense_qber_pairwise(rho, 1) == doctest::Approx(0.1355).epsilon(1e-13));
  CHECK(dense_qber_pairwise(rho, 2) == doctest::Approx(0.095).epsilon(1e-13));
  CHECK(dense_qber_pairwise(rho, 3) == doctest::Approx(0.05).epsilon(1e-13));
}

TEST_CASE("sampled gate orders converge to the average") {
  const auto rho = simulate_prep_circuit(4, {0.1, Topology::star}, GateOrderSpec::sampled(600, 3));
  for (int b = 1; b <= 3; ++b) CHECK(dense_qber_pairwise(rho, b) == doctest::Approx(0.0935).epsilon(0.1));
}

TEST_CASE("channel noise: closed form and exact local model") {
  CHECK(channel_qber(3, 0.05) == doctest::Approx(0.10696875).epsilon(1e-13));
  CHECK(local_channel_qber(3, 0.05) == doctest::Approx(0.073125).epsilon(1e-13));
  CHECK(local_channel_qber(4, 0.1) == doctest::Approx(0.1854875).epsilon(1e-13));
  CHECK(channel_qber(4, 0.1) == doctest::Approx(0.3009125).epsilon(1e-13));
  for (double f : {0.0, 0.01, 0.2, 1.0}) CHECK(channel_qber(2, f) == doctest::Approx(local_channel_qber(2, f)));
  const auto ghz = ghz_basis_vector(4, {0, Sign::plus});
  for (double f : {0.02, 0.1, 0.3}) {
    const auto noisy = ghz_diagonal_from_dense(apply_channel_noise(ghz, f));
    CHECK(qber_z(noisy) == doctest::Approx(local_channel_qber(4, f)).epsilon(1e-12));
  }
  // noise on a subset of qubits
  const auto one = ghz_diagonal_from_dense(apply_channel_noise(ghz, 0.2, std::vector<int>{1}));
  CHECK(qber_z(one) == doctest::Approx(0.1));
}

TEST_CASE("noise configuration JSON") {
  const auto g = NoiseConfig::from_json({{"model", "gate"}, {"fG", 0.05}, {"topology", "router"}});
  CHECK(g.model == NoiseConfig::Model::gate);
  CHECK(g.gate.topology == Topology::router);
  CHECK(NoiseConfig::from_json(g.to_json()).gate.f_gate == 0.05);
  const auto c = NoiseConfig::from_json({{"model", "channel"}, {"fC", 0.01}});
  CHECK(c.channel.f_channel == 0.01);
  CHECK_THROWS_AS(NoiseConfig::from_json({{"model", "gate"}}), InvalidArgument);
  CHECK_THROWS_AS(NoiseConfig::from_json({{"model", "laser"}}), InvalidArgument);
  CHECK_THROWS_AS(NoiseConfig::from_json({{"model", "gate"}, {"fG", 2.0}}), InvalidArgument);
}
