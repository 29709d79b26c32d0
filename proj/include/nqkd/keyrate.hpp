#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "nqkd/noise.hpp"

namespace nqkd {

/// Number of conference parties; may be the N -> infinity limit.
class PartyCount {
 public:
  static PartyCount finite(int n);
  static PartyCount infinite() { return PartyCount(0, true); }
  /// Parses "7" or "inf".
  static PartyCount parse(const std::string& text);

  bool is_infinite() const { return infinite_; }
  int value() const;  // throws for the infinite limit
  std::string to_string() const;

 private:
  PartyCount(int n, bool inf) : n_(n), infinite_(inf) {}
  int n_;
  bool infinite_;
};

/// Binary Shannon entropy in bits; h(0) = h(1) = 0.
double binary_entropy(double p);

/// Measured (or modelled) parameters entering the asymptotic rate.
struct RateInput {
  int n_parties = 2;
  double q_z = 0.0;
  double q_x = 0.0;
  std::vector<double> q_ab;  // one per Bob
  double t_rep = 1.0;        // seconds per round
};

struct RateReport {
  /// Secret bits per round, may be negative.
  double r_inf = 0.0;
  /// max(r_inf, 0): usable for key-length accounting.
  double r_clamped = 0.0;
  /// Key rate in bits per second, r_inf / t_rep.
  double rate = 0.0;
  double t_rep = 1.0;
  /// The four summands of the rate: x log x terms for (1 - Q_Z/2 - Q_X) and
  /// (Q_X - Q_Z/2), the (1 - Q_Z)(1 - log(1 - Q_Z)) term, and -h(max Q_AB).
  std::array<double, 4> components{};
  /// 1-based index of the Bob with the largest Q_AB (the binding link).
  int limiting_bob = 1;

  nlohmann::json to_json() const;
};

/// Asymptotic secret fraction for a GHZ-diagonal (twirled) state given
/// (Q_Z, Q_X, {Q_AB_i}). Arguments of the x log x terms that fall below 0 by
/// at most 1e-9 are clamped; larger violations throw NumericError.
RateReport secret_fraction(const RateInput& input);

/// Closed-form secret fraction of the depolarized (GHZ + white noise) state.
double rate_depolarized(double qber, PartyCount n);
inline double rate_depolarized(double qber, int n) { return rate_depolarized(qber, PartyCount::finite(n)); }
/// Six-state protocol rate, 1 - h(3Q/2) - (3 log2(3)/2) Q.
double rate_six_state(double qber);

/// Rate inputs of the depolarized state with Z-basis QBER q.
RateInput depolarized_rate_input(int n_parties, double qber, double t_rep = 1.0);

/// Largest QBER with a positive depolarized-state rate.
double threshold_qber(PartyCount n);
inline double threshold_qber(int n) { return threshold_qber(PartyCount::finite(n)); }

/// Conference rate via bipartite six-state links and a one-time-padded relay.
RateReport twoqkd_conference_rate(const std::vector<double>& link_qbers, double t_rep);

/// NQKD over the router network with noisy preparation gates (t_rep = 1).
RateReport nqkd_gate_rate(int n_parties, double f_gate, Topology topology = Topology::router, double t_rep = 1.0);
/// 2QKD with Bell pairs from one noisy gate each: link QBER f_G/2.
RateReport twoqkd_gate_rate(int n_parties, double f_gate, double t_rep);
/// NQKD with per-qubit channel noise using the closed-form channel QBER.
RateReport nqkd_channel_rate(int n_parties, double f_channel, double t_rep = 1.0);
/// 2QKD links through the same channel: link QBER channel_qber(2, f_C).
RateReport twoqkd_channel_rate(int n_parties, double f_channel, double t_rep);

/// Gate failure probability at which NQKD (router, t_rep = 1 s) and 2QKD
/// (t_rep = N-1 s) have equal rates. Requires N >= 3.
double nqkd_gate_threshold(int n_parties);
/// Same crossover for channel depolarization.
double nqkd_channel_threshold(int n_parties);

}  // namespace nqkd
