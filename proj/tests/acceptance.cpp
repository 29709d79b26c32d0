// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion-id]; without an id every criterion runs.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "nqkd/ghz.hpp"
#include "nqkd/keyrate.hpp"
#include "nqkd/network.hpp"
#include "nqkd/noise.hpp"
#include "nqkd/protocol.hpp"
#include "tables.hpp"

using namespace nqkd;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string note) {
    if (!ok) pass = false;
    if (!ok || notes.size() < 40) notes.push_back((ok ? "  ok   " : "  FAIL ") + note);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome table_qber_thresholds() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int n = 2; n <= 17; ++n) {
    const double d = std::abs(threshold_qber(n) - testing::kThresholdQber[n - 2]);
    worst = std::max(worst, d);
    o.require(d <= 1e-5, fmt::format("N={:2d} threshold {:.7f} (table {:.6f})", n, threshold_qber(n),
                                     testing::kThresholdQber[n - 2]));
  }
  const double inf = threshold_qber(PartyCount::infinite());
  o.require(std::abs(inf - testing::kThresholdQberInfinite) <= 1e-5, fmt::format("N=inf threshold {:.7f}", inf));
  const double dt = seconds_since(t0);
  o.require(dt < 1.0, fmt::format("runtime {:.3f} s, max deviation {:.2e}", dt, worst));
  return o;
}

Outcome table_gate_thresholds() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 3; n <= 18; ++n) {
    const double f = nqkd_gate_threshold(n);
    const double d = f - testing::kThresholdGate[n - 3];
    o.require(std::abs(d) <= 2e-4, fmt::format("N={:2d} f_G {:.7f} (table {:.7f}, residual {:+.1e})", n, f,
                                               testing::kThresholdGate[n - 3], d));
  }
  const double dt = seconds_since(t0);
  o.require(dt < 10.0, fmt::format("runtime {:.3f} s", dt));
  return o;
}

Outcome formula_cross_validation() {
  Outcome o;
  double worst = 0.0;
  for (int n = 2; n <= 16; ++n) {
    const double qmax = std::min(0.5, max_depolarized_qber(n));
    for (int i = 0; i < 100; ++i) {
      const double q = qmax * i / 99.0 * 0.999;
      worst = std::max(worst, std::abs(secret_fraction(depolarized_rate_input(n, q)).r_inf - rate_depolarized(q, n)));
    }
  }
  o.require(worst <= 1e-10, fmt::format("general vs closed form, N=2..16, max |diff| {:.2e}", worst));
  double six = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double q = 0.5 * i / 99.0;
    six = std::max(six, std::abs(rate_depolarized(q, 2) - rate_six_state(q)));
  }
  o.require(six <= 1e-12, fmt::format("N=2 vs six-state rate, max |diff| {:.2e}", six));
  return o;
}

Outcome gate_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 2; n <= 6; ++n) {
    double worst = 0.0;
    for (double f : {0.0, 0.05, 0.1, 0.2}) {
      for (auto topo : {Topology::star, Topology::router}) {
        const auto lam = ghz_diagonal_from_dense(simulate_prep_circuit(n, {f, topo}, GateOrderSpec::all()));
        const auto l = topo == Topology::star ? lambda0_star(n, f) : lambda0_router(n, f);
        worst = std::max(worst, std::abs(lam.lambda(0, Sign::plus) - l.first));
        worst = std::max(worst, std::abs(lam.lambda(0, Sign::minus) - l.second));
        for (int b = 1; b < n; ++b) worst = std::max(worst, std::abs(qber_pairwise(lam, b) - qab_average(n, f)));
      }
    }
    o.require(worst <= 1e-10, fmt::format("N={} dense circuit vs analytic, max |diff| {:.2e}", n, worst));
  }
  const double dt = seconds_since(t0);
  o.require(dt < 60.0, fmt::format("runtime {:.2f} s", dt));
  return o;
}

Outcome channel_oracle() {
  Outcome o;
  for (int n = 2; n <= 6; ++n) {
    const auto ghz = ghz_basis_vector(n, {0, Sign::plus});
    double worst = 0.0;
    double worst_local = 0.0;
    for (double f : {0.01, 0.05, 0.1, 0.2}) {
      const double q = qber_z(ghz_diagonal_from_dense(apply_channel_noise(ghz, f)));
      worst = std::max(worst, std::abs(q - channel_qber(n, f)));
      worst_local = std::max(worst_local, std::abs(q - local_channel_qber(n, f)));
    }
    o.require(worst <= 1e-10, fmt::format("N={} per-qubit channel vs closed form, max |diff| {:.2e} "
                                          "(exact local-channel count {:.1e})",
                                          n, worst, worst_local));
  }
  return o;
}

Outcome correlation_theorem() {
  Outcome o;
  const PauliAxis axes[] = {PauliAxis::x, PauliAxis::y, PauliAxis::z};
  for (int n = 3; n <= 6; ++n) {
    std::vector<Complex> amps(std::size_t{1} << n);
    amps.front() = 0.6;
    amps.back() = std::polar(0.8, 0.7);
    const auto psi = DenseState::from_amplitudes(n, amps);
    double off = 0.0;
    double zz = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (auto a : axes) {
          for (auto b : axes) {
            const double c = pairwise_correlator(psi, a, b, i, j);
            if (a == PauliAxis::z && b == PauliAxis::z) {
              zz = std::max(zz, std::abs(c - 1.0));
            } else {
              off = std::max(off, std::abs(c));
            }
          }
        }
      }
    }
    const auto p = psi.z_probabilities();
    const double correlated = p.front() + p.back();
    o.require(off <= 1e-12 && zz <= 1e-12 && std::abs(correlated - 1.0) <= 1e-12,
              fmt::format("N={} max off-(z,z) correlator {:.1e}, |<ZZ>-1| {:.1e}, P(all equal) {:.15f}", n, off, zz,
                          correlated));
  }
  return o;
}

Outcome network_coding() {
  Outcome o;
  for (int n = 2; n <= 8; ++n) {
    const auto r = distribute_ghz_via_router(n);
    o.require(std::abs(1.0 - r.worst_fidelity()) <= 1e-12,
              fmt::format("N={} fidelity +:{:.15f} -:{:.15f} coherent:{:.15f}", n, r.fidelity_plus, r.fidelity_minus,
                          r.fidelity_coherent));
  }
  for (int n = 3; n <= 8; ++n) {
    const auto c = compare_rates(NetworkModel::router(n), NoiseConfig{});
    o.require(c.ratio && *c.ratio == n - 1.0, fmt::format("router N={} ideal ratio {}", n, c.ratio.value_or(-1)));
  }
  const auto b = compare_rates(NetworkModel::butterfly(), NoiseConfig{});
  o.require(b.ratio && *b.ratio == 2.0, fmt::format("butterfly ideal ratio {}", b.ratio.value_or(-1)));
  return o;
}

Outcome monte_carlo() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto state = depolarized_state(3, 0.1);
  ProtocolConfig c;
  c.n_parties = 3;
  c.rounds = 1000000;
  c.seed = 2024;
  c.source.state = state;
  c.keep_transcript = false;
  const auto r = run_protocol(c);

  auto band = [&](double est, double truth, double trials, const std::string& name) {
    const double sigma = std::sqrt(truth * (1.0 - truth) / trials);
    o.require(std::abs(est - truth) <= 3.0 * sigma,
              fmt::format("{} = {:.6f}, analytic {:.6f}, {:.2f} sigma (n={})", name, est, truth,
                          std::abs(est - truth) / sigma, trials));
  };
  const auto& z = r.estimates.z;
  const auto& x = r.estimates.x;
  band(z.q_z, qber_z(state), static_cast<double>(z.rounds), "Q_Z_hat");
  band(x.q_x, qber_x(state), static_cast<double>(x.n_plus + x.n_minus), "Q_X_hat");
  for (int b = 1; b < 3; ++b) {
    band(z.q_ab[b - 1], qber_pairwise(state, b), static_cast<double>(z.rounds), fmt::format("Q_AB{}_hat", b));
  }
  const double second = static_cast<double>(r.ledger.second_type_rounds);
  band(static_cast<double>(r.ledger.discarded_second_type_rounds) / second, 0.5, second, "odd-kappa discard fraction");
  const double dt = seconds_since(t0);
  o.require(dt < 120.0, fmt::format("runtime {:.2f} s", dt));
  return o;
}

Outcome asymptotic_limit() {
  Outcome o;
  // only the L -> infinity key fraction is asserted; finite-key bounds are not modelled
  const double truth = rate_depolarized(0.05, 3);
  double err = 1.0;
  for (std::uint64_t rounds : {10000ULL, 100000ULL, 1000000ULL}) {
    ProtocolConfig c;
    c.n_parties = 3;
    c.rounds = rounds;
    c.seed = 99;
    c.p_p = 0.1;
    c.source.state = depolarized_state(3, 0.05);
    c.keep_transcript = false;
    const auto r = run_protocol(c);
    const double fraction = r.key_length / static_cast<double>(r.ledger.key_rounds);
    err = std::abs(fraction - truth);
    o.notes.push_back(fmt::format("  L={:>7} key fraction {:.5f} vs asymptotic rate {:.5f}", rounds, fraction, truth));
  }
  o.require(err <= 0.01, fmt::format("L=1e6 deviation {:.2e} <= 1e-2", err));
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "QBER threshold table", table_qber_thresholds},
      {2, "gate-failure threshold table", table_gate_thresholds},
      {3, "rate formula cross-validation", formula_cross_validation},
      {4, "gate-noise dense oracle", gate_oracle},
      {5, "channel-noise dense oracle", channel_oracle},
      {6, "perfect-correlation theorem", correlation_theorem},
      {7, "router network coding and network ratios", network_coding},
      {8, "Monte Carlo estimator consistency", monte_carlo},
      {9, "asymptotic key-fraction limit", asymptotic_limit},
  };
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  if (argc > 2 || (argc > 1 && (only < 1 || only > 9))) {
    std::fprintf(stderr, "usage: %s [1-9]\n", argv[0]);
    return 2;
  }
  bool all = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("  exception: ") + e.what());
    }
    for (const auto& n : o.notes) std::printf("%s\n", n.c_str());
    std::printf("[%s] criterion %d: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
