#include <doctest.h>

#include <cmath>

#include "nqkd/error.hpp"
#include "nqkd/network.hpp"

using namespace nqkd;

TEST_CASE("router schedule") {
  for (int n = 2; n <= 8; ++n) {
    const auto nq = schedule_star_router(n, Protocol::nqkd);
    const auto tq = schedule_star_router(n, Protocol::twoqkd);
    CHECK(nq.t_rep() == 1.0);
    CHECK(tq.t_rep() == n - 1.0);
    CHECK(nq.within_capacity());
    CHECK(tq.within_capacity());
    // the graph-derived schedule agrees
    const auto g = NetworkModel::router(n);
    CHECK(schedule_for(g, Protocol::nqkd).t_rep() == 1.0);
    CHECK(schedule_for(g, Protocol::twoqkd).t_rep() == n - 1.0);
    CHECK(schedule_for(g, Protocol::twoqkd).within_capacity());
  }
}

TEST_CASE("butterfly schedule") {
  const auto nq = schedule_butterfly(Protocol::nqkd);
  const auto tq = schedule_butterfly(Protocol::twoqkd);
  CHECK(nq.states_per_use() == 2.0);
  CHECK(nq.t_rep() == 0.5);
  CHECK(tq.t_rep() == 1.0);
  CHECK(nq.within_capacity());
  CHECK(tq.within_capacity());
  const auto g = NetworkModel::butterfly();
  CHECK(g.multicast_capacity() == 2);
  CHECK(g.twoqkd_rounds_per_use() == 1.0);
  CHECK(schedule_for(g, Protocol::nqkd).t_rep() == 0.5);
  CHECK(schedule_for(g, Protocol::twoqkd).t_rep() == 1.0);
}

TEST_CASE("generalized multicast network") {
  for (int n = 3; n <= 6; ++n) {
    for (int cap = 1; cap <= 4; ++cap) {
      CHECK(schedule_multicast(n, cap, Protocol::nqkd).rounds == cap);
      CHECK(schedule_multicast(n, cap, Protocol::twoqkd).rounds == doctest::Approx(cap / (n - 1.0)));
      const auto m = NetworkModel::multicast(n, cap);
      CHECK(schedule_for(m, Protocol::twoqkd).t_rep() == doctest::Approx((n - 1.0) / cap));
    }
  }
  CHECK_THROWS_AS(NetworkModel::multicast(3, 0), InvalidArgument);
}

TEST_CASE("star network has no bottleneck") {
  const auto g = NetworkModel::star(5);
  CHECK(g.multicast_capacity() == 1);
  CHECK(g.twoqkd_rounds_per_use() == 1.0);
  CHECK_FALSE(g.has_router());
}

TEST_CASE("graph JSON") {
  const nlohmann::json j = {{"nodes",
                             {{{"id", "A"}, {"role", "alice"}},
                              {{"id", "R"}, {"role", "router"}},
                              {{"id", "B1"}, {"role", "bob"}},
                              {{"id", "B2"}, {"role", "bob"}}}},
                            {"edges", {{{"from", "A"}, {"to", "R"}}, {{"from", "R"}, {"to", "B1"}}, {{"from", "R"}, {"to", "B2"}}}}};
  const auto g = NetworkModel::from_json(j);
  CHECK(g.n_parties() == 3);
  CHECK(g.has_router());
  CHECK(NetworkModel::from_json(g.to_json()).edges().size() == 3);
  CHECK(schedule_for(g, Protocol::twoqkd).t_rep() == 2.0);

  auto unreachable = j;
  unreachable["edges"].erase(2);
  CHECK_THROWS_AS(NetworkModel::from_json(unreachable), InvalidArgument);
  auto two_alices = j;
  two_alices["nodes"][1]["role"] = "alice";
  CHECK_THROWS_AS(NetworkModel::from_json(two_alices), InvalidArgument);
  auto dangling = j;
  dangling["edges"].push_back({{"from", "A"}, {"to", "Z"}});
  CHECK_THROWS_AS(NetworkModel::from_json(dangling), InvalidArgument);
  CHECK_THROWS_AS(NetworkModel::from_json({{"nodes", 3}}), InvalidArgument);
}

TEST_CASE("two parallel paths double the routing rate") {
  // A reaches B1 and B2 over separate relays
  const nlohmann::json j = {{"nodes",
                             {{{"id", "A"}, {"role", "alice"}},
                              {{"id", "R1"}, {"role", "router"}},
                              {{"id", "R2"}, {"role", "router"}},
                              {{"id", "B1"}, {"role", "bob"}},
                              {{"id", "B2"}, {"role", "bob"}}}},
                            {"edges",
                             {{{"from", "A"}, {"to", "R1"}},
                              {{"from", "A"}, {"to", "R2"}},
                              {{"from", "R1"}, {"to", "B1"}},
                              {{"from", "R2"}, {"to", "B2"}}}}};
  const auto g = NetworkModel::from_json(j);
  CHECK(g.twoqkd_rounds_per_use() == 1.0);
  CHECK(g.multicast_capacity() == 1);
}

TEST_CASE("router network code distributes the rotated GHZ state") {
  for (int n = 2; n <= 8; ++n) {
    const auto r = distribute_ghz_via_router(n);
    CHECK(r.probability_plus == doctest::Approx(0.5));
    CHECK(r.probability_minus == doctest::Approx(0.5));
    CHECK(std::abs(r.fidelity_plus - 1.0) <= 1e-12);
    CHECK(std::abs(r.fidelity_minus - 1.0) <= 1e-12);
    CHECK(std::abs(r.fidelity_coherent - 1.0) <= 1e-12);
    CHECK(r.state.n_qubits() == n);
  }
}

TEST_CASE("a single transmitted qubit cannot carry N-1 Bell pairs") {
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(bell_pairs_entanglement(k) - k) <= 1e-12);
  const auto two = entanglement_bound_check(2);
  CHECK(two.uses_needed == 1);
  const auto three = entanglement_bound_check(3);
  CHECK(three.required == doctest::Approx(2.0));
  CHECK(three.uses_needed == 2);
  CHECK(three.dense_checked);
  CHECK(entanglement_bound_check(30).uses_needed == 29);
}

TEST_CASE("rate comparison at zero noise") {
  for (int n = 3; n <= 8; ++n) {
    const auto c = compare_rates(NetworkModel::router(n), NoiseConfig{});
    REQUIRE(c.ratio);
    CHECK(*c.ratio == n - 1.0);
    CHECK(c.advantage);
  }
  const auto b = compare_rates(NetworkModel::butterfly(), NoiseConfig{});
  REQUIRE(b.ratio);
  CHECK(*b.ratio == 2.0);
}

TEST_CASE("rate comparison under gate noise") {
  NoiseConfig low;
  low.model = NoiseConfig::Model::gate;
  low.gate = {0.05, Topology::router};
  CHECK(compare_rates(NetworkModel::router(3), low).advantage);
  NoiseConfig high = low;
  high.gate.f_gate = 0.10;
  CHECK_FALSE(compare_rates(NetworkModel::router(3), high).advantage);
  // NQKD falls with N at fixed noise; 2QKD scales as 1/(N-1)
  double prev = 2.0;
  for (int n = 3; n <= 8; ++n) {
    const auto c = compare_rates(NetworkModel::router(n), low);
    CHECK(c.nqkd.rate < prev);
    prev = c.nqkd.rate;
    CHECK(c.twoqkd.rate * (n - 1) == doctest::Approx(rate_six_state(0.025)));
  }
}
