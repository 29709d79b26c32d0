#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nqkd/dense_state.hpp"
#include "nqkd/keyrate.hpp"
#include "nqkd/noise.hpp"

namespace nqkd {

enum class NodeRole { alice, bob, router };
enum class Protocol { nqkd, twoqkd };

std::string to_string(Protocol p);

struct NetworkNode {
  std::string id;
  NodeRole role = NodeRole::router;
};

/// Directed edge between node indices; every edge carries one qubit per use.
struct NetworkEdge {
  int from = 0;
  int to = 0;
};

/// Directed graph with unit-capacity edges. A model without edges stands for
/// the generalized network in which Alice can multicast `declared_multicast`
/// bits per use.
class NetworkModel {
 public:
  /// Alice connected to every Bob directly.
  static NetworkModel star(int n_parties);
  /// Alice -> router C -> each Bob: a single bottleneck edge.
  static NetworkModel router(int n_parties);
  /// The classic two-receiver butterfly (9 edges).
  static NetworkModel butterfly();
  /// Abstract network with multicast capacity n.
  static NetworkModel multicast(int n_parties, int capacity);

  /// {"nodes": [{"id", "role"}], "edges": [{"from", "to"}]} with roles
  /// "alice", "bob" or "router". Bobs are ordered as listed.
  static NetworkModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const std::vector<NetworkNode>& nodes() const { return nodes_; }
  const std::vector<NetworkEdge>& edges() const { return edges_; }
  int n_parties() const { return n_parties_; }
  int alice() const { return alice_; }
  const std::vector<int>& bobs() const { return bobs_; }
  bool has_router() const;
  bool is_abstract() const { return edges_.empty(); }

  /// Largest number of qubits per use from `source` to `sink`.
  long max_flow(int source, int sink) const;
  /// Min-cut separating Alice from every Bob in `bob_subset` (indices into bobs()).
  long cut_to_subset(const std::vector<int>& bob_subset) const;
  /// Bits Alice can multicast to all Bobs per use (min over Bobs of max-flow).
  int multicast_capacity() const;
  /// Rounds of 2QKD per use: the largest t such that t distinct qubits per use
  /// reach each Bob by routing, min over Bob subsets S of cut(S)/|S|.
  double twoqkd_rounds_per_use() const;

 private:
  NetworkModel() = default;
  void index_roles();
  void validate() const;

  std::vector<NetworkNode> nodes_;
  std::vector<NetworkEdge> edges_;
  int alice_ = 0;
  std::vector<int> bobs_;
  int n_parties_ = 0;
  int declared_multicast_ = 0;
};

/// Distribution plan for a protocol: total qubits sent over each edge during
/// `network_uses` uses, producing `rounds` protocol rounds.
struct Schedule {
  Protocol protocol = Protocol::nqkd;
  double network_uses = 1.0;
  double rounds = 1.0;
  std::vector<double> edge_loads;

  /// Seconds per round at one use per second.
  double t_rep() const { return network_uses / rounds; }
  /// Shared states produced per use (GHZ states for NQKD).
  double states_per_use() const { return rounds / network_uses; }
  /// True when no edge carries more than one qubit per use.
  bool within_capacity() const;

  nlohmann::json to_json() const;
};

Schedule schedule_star_router(int n_parties, Protocol protocol);
Schedule schedule_butterfly(Protocol protocol);
/// Generalized network with multicast capacity n: NQKD n rounds per use,
/// 2QKD n/(N-1).
Schedule schedule_multicast(int n_parties, int capacity, Protocol protocol);
/// Schedule derived from the graph: NQKD at the multicast capacity, 2QKD at
/// the routing rate with edge loads from an integral flow.
Schedule schedule_for(const NetworkModel& network, Protocol protocol);

struct RouterDistributionReport {
  int n_parties = 0;
  double probability_plus = 0.0;
  double probability_minus = 0.0;
  double fidelity_plus = 0.0;   // outcome +1 branch
  double fidelity_minus = 0.0;  // outcome -1 branch after X on B_1
  double fidelity_coherent = 0.0;  // controlled correction, C traced out
  DenseState state;  // output of the +1 branch on A, B_1..B_{N-1}

  double worst_fidelity() const;
  nlohmann::json to_json() const;
};

/// Runs the router network code on state vectors (register C, A, B_1, ...)
/// and compares the output with H^{(x)N}|GHZ>.
RouterDistributionReport distribute_ghz_via_router(int n_parties);

struct EntanglementBoundReport {
  int n_parties = 0;
  double required = 0.0;  // E_{A|B} of N-1 Bell pairs
  double bound_per_use = 1.0;
  int uses_needed = 0;
  bool dense_checked = false;

  nlohmann::json to_json() const;
};

/// Entropy of entanglement of `pairs` Bell pairs across the A|B cut,
/// computed from the reduced density matrix.
double bell_pairs_entanglement(int pairs);

EntanglementBoundReport entanglement_bound_check(int n_parties);

struct RateComparison {
  RateReport nqkd;
  RateReport twoqkd;
  Schedule nqkd_schedule;
  Schedule twoqkd_schedule;
  bool advantage = false;
  /// NQKD rate over 2QKD rate; empty when the 2QKD rate is zero.
  std::optional<double> ratio;

  nlohmann::json to_json() const;
};

/// NQKD vs 2QKD key rates over the network under the given noise. Gate noise
/// uses the router lambda pair on networks with a router node and the star
/// pair otherwise.
RateComparison compare_rates(const NetworkModel& network, const NoiseConfig& noise);

}  // namespace nqkd
