#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nqkd/dense_state.hpp"
#include "nqkd/ghz.hpp"

namespace nqkd {

enum class Topology { star, router };

/// Two-qubit gate failure model: with probability f_G the processed qubits
/// are replaced by the maximally mixed state.
struct GateNoise {
  double f_gate = 0.0;
  Topology topology = Topology::star;
};

/// Independent depolarizing channel acting on each transmitted qubit.
struct ChannelNoise {
  double f_channel = 0.0;
};

/// Pattern of gate successes (bit set) and failures over the N-1 CNOTs.
/// Gate i (1-based) is the i-th character of the pattern string "x".
class GatePattern {
 public:
  GatePattern(int n_gates, std::uint64_t successes);
  /// Parses a string of '0'/'1' characters, gate 1 first.
  static GatePattern parse(const std::string& bits);

  int n_gates() const { return n_gates_; }
  bool succeeded(int gate) const;  // gate in 1..n_gates
  int weight() const;
  bool all_succeeded() const { return weight() == n_gates_; }
  std::string to_string() const;

  /// Number of independently random subsets of parties left by the pattern:
  /// the maximal runs of ones in "x1" plus the zeros of "x1".
  int block_count() const;
  /// Prefactor of the pattern's contribution to lambda_0^+: 1 for the
  /// all-success pattern, 2^(-block_count) otherwise.
  double prefactor() const;

 private:
  int n_gates_;
  std::uint64_t successes_;  // bit (i-1) = gate i
};

/// Runs of ones plus zeros in a bit string ("x1" form, i.e. already
/// including the trailing 1). Throws on an empty string.
int block_count(const std::string& x1);

void require_probability(double p, const char* what);

/// GHZ with white noise, parameterized by its Z-basis QBER.
GhzDiagonalState depolarized_state(int n_parties, double qber);
/// Largest QBER a depolarized state can have: (2^N - 2)/(2^N - 1).
double max_depolarized_qber(int n_parties);

/// (lambda_0^+, lambda_0^-).
using Lambda0 = std::pair<double, double>;

/// lambda_0^+ as a sum over all 2^(N-1) gate patterns weighted by prefactor.
Lambda0 lambda0_star_pattern_sum(int n_parties, double f_gate);
/// Compact form via c'(w) over Hamming weights.
Lambda0 lambda0_star_compact(int n_parties, double f_gate);
/// c'(w) = sum over patterns of weight w of the prefactor (w < N-1).
double weight_prefactor_sum(int n_parties, int weight);

/// Star-network preparation. Evaluates both forms (up to N = 20) and throws
/// NumericError if they disagree by more than 1e-12.
Lambda0 lambda0_star(int n_parties, double f_gate);
/// Router network: one extra noisy gate at Alice dephases her qubit.
Lambda0 lambda0_router(int n_parties, double f_gate);
Lambda0 lambda0(int n_parties, const GateNoise& noise);

/// Q_Z implied by a lambda_0 pair.
inline double qber_from_lambda0(const Lambda0& l) { return 1.0 - l.first - l.second; }
/// Q_X implied by a lambda_0 pair of a depolarized state.
inline double qber_x_from_lambda0(const Lambda0& l) { return 0.5 * (1.0 - (l.first - l.second)); }

/// Average Q_{AB_i} over random gate orders; 0 at f_G = 0.
double qab_average(int n_parties, double f_gate);

/// Closed-form QBER for channel noise: ((2^N-2)/2^N)(1-(1-f_C)^N).
double channel_qber(int n_parties, double f_channel);
/// Exact Z-basis QBER when each of the N qubits independently passes the
/// depolarizing channel. With k < N qubits hit, all parties agree with
/// probability 2^-k; with k = N, with probability 2^(1-N).
double local_channel_qber(int n_parties, double f_channel);

/// Applies (1-f) rho + f tr_q(rho) (x) 1/2 to each listed qubit (all qubits by default).
DenseState apply_channel_noise(const DenseState& psi, double f_channel,
                               std::optional<std::vector<int>> qubits = std::nullopt);

/// How gate orders are averaged by the preparation oracle.
struct GateOrderSpec {
  enum class Mode { fixed, all, sampled };
  Mode mode = Mode::all;
  std::size_t samples = 0;  // for sampled
  std::uint64_t seed = 0;   // for sampled

  static GateOrderSpec fixed() { return {Mode::fixed, 0, 0}; }
  static GateOrderSpec all() { return {Mode::all, 0, 0}; }
  static GateOrderSpec sampled(std::size_t count, std::uint64_t seed) { return {Mode::sampled, count, seed}; }
};

/// Output of the preparation circuit for one pattern in a given gate order
/// (order lists the Bob qubits targeted by gates 1..N-1). For the router
/// topology `alice_gate_failed` selects the dephased input branch.
DenseState prep_circuit_pattern(int n_parties, const GatePattern& pattern, const std::vector<int>& order,
                                bool alice_gate_failed = false);

/// Exhaustive enumeration of all gate-failure patterns (and, for the router,
/// the extra gate at Alice), weighted by f_G powers and averaged over gate
/// orders. Returns the dense, untwirled mixture.
DenseState simulate_prep_circuit(int n_parties, const GateNoise& noise, const GateOrderSpec& orders);

/// Noise configuration as accepted on the command line / in config files:
/// {"model": "gate"|"channel", "fG"|"fC": float, "topology": "star"|"router"}.
struct NoiseConfig {
  enum class Model { none, gate, channel };
  Model model = Model::none;
  GateNoise gate;
  ChannelNoise channel;

  nlohmann::json to_json() const;
  static NoiseConfig from_json(const nlohmann::json& j);
};

}  // namespace nqkd
