#include "nqkd/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/push_relabel_max_flow.hpp>

#include "nqkd/error.hpp"
#include "nqkd/ghz.hpp"

namespace nqkd {
namespace {

using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
using FlowGraph = boost::adjacency_list<
    boost::vecS, boost::vecS, boost::directedS, boost::no_property,
    boost::property<boost::edge_capacity_t, long,
                    boost::property<boost::edge_residual_capacity_t, long,
                                    boost::property<boost::edge_reverse_t, Traits::edge_descriptor>>>>;
using FlowEdge = Traits::edge_descriptor;

class FlowNetwork {
 public:
  explicit FlowNetwork(int vertices) : g_(vertices) {}

  FlowEdge add(int u, int v, long capacity) {
    auto cap = boost::get(boost::edge_capacity, g_);
    auto rev = boost::get(boost::edge_reverse, g_);
    const auto e = boost::add_edge(u, v, g_).first;
    const auto r = boost::add_edge(v, u, g_).first;
    cap[e] = capacity;
    cap[r] = 0;
    rev[e] = r;
    rev[r] = e;
    return e;
  }

  long solve(int source, int sink) { return boost::push_relabel_max_flow(g_, source, sink); }

  long flow(FlowEdge e) const {
    return boost::get(boost::edge_capacity, g_, e) - boost::get(boost::edge_residual_capacity, g_, e);
  }

 private:
  FlowGraph g_;
};

NodeRole parse_role(const std::string& s) {
  if (s == "alice") return NodeRole::alice;
  if (s == "bob") return NodeRole::bob;
  if (s == "router") return NodeRole::router;
  throw InvalidArgument("unknown node role '" + s + "'");
}

const char* role_name(NodeRole r) {
  switch (r) {
    case NodeRole::alice:
      return "alice";
    case NodeRole::bob:
      return "bob";
    case NodeRole::router:
      break;
  }
  return "router";
}

void require_parties(int n) {
  if (n < 2) throw InvalidArgument("a conference needs at least 2 parties");
}

// H^{(x)N}|GHZ> = (|+...+> + |-...->)/sqrt(2)
DenseState hadamard_ghz(int n) {
  auto s = ghz_basis_vector(n, {0, Sign::plus});
  for (int q = 0; q < n; ++q) s = s.with_gate(gates::hadamard(), q);
  return s;
}

}  // namespace

std::string to_string(Protocol p) { return p == Protocol::nqkd ? "NQKD" : "2QKD"; }

NetworkModel NetworkModel::star(int n_parties) {
  require_parties(n_parties);
  NetworkModel m;
  m.nodes_.push_back({"A", NodeRole::alice});
  for (int k = 1; k < n_parties; ++k) {
    m.nodes_.push_back({"B" + std::to_string(k), NodeRole::bob});
    m.edges_.push_back({0, k});
  }
  m.index_roles();
  return m;
}

NetworkModel NetworkModel::router(int n_parties) {
  require_parties(n_parties);
  NetworkModel m;
  m.nodes_.push_back({"A", NodeRole::alice});
  m.nodes_.push_back({"C", NodeRole::router});
  m.edges_.push_back({0, 1});
  for (int k = 1; k < n_parties; ++k) {
    m.nodes_.push_back({"B" + std::to_string(k), NodeRole::bob});
    m.edges_.push_back({1, k + 1});
  }
  m.index_roles();
  return m;
}

NetworkModel NetworkModel::butterfly() {
  NetworkModel m;
  m.nodes_ = {{"A", NodeRole::alice},  {"B1", NodeRole::bob},    {"B2", NodeRole::bob},   {"S1", NodeRole::router},
              {"S2", NodeRole::router}, {"M", NodeRole::router}, {"W", NodeRole::router}};
  // A->S1 (a), A->S2 (b), S1->B1 (a), S1->M (a), S2->B2 (b), S2->M (b),
  // M->W (a+b), W->B1 (a+b), W->B2 (a+b)
  m.edges_ = {{0, 3}, {0, 4}, {3, 1}, {3, 5}, {4, 2}, {4, 5}, {5, 6}, {6, 1}, {6, 2}};
  m.index_roles();
  return m;
}

NetworkModel NetworkModel::multicast(int n_parties, int capacity) {
  require_parties(n_parties);
  if (capacity < 1) throw InvalidArgument("multicast capacity must be at least 1");
  NetworkModel m;
  m.nodes_.push_back({"A", NodeRole::alice});
  for (int k = 1; k < n_parties; ++k) m.nodes_.push_back({"B" + std::to_string(k), NodeRole::bob});
  m.declared_multicast_ = capacity;
  m.index_roles();
  return m;
}

NetworkModel NetworkModel::from_json(const nlohmann::json& j) {
  NetworkModel m;
  try {
    std::vector<std::string> ids;
    for (const auto& node : j.at("nodes")) {
      const auto id = node.at("id").get<std::string>();
      if (std::find(ids.begin(), ids.end(), id) != ids.end()) throw InvalidArgument("duplicate node id '" + id + "'");
      ids.push_back(id);
      m.nodes_.push_back({id, parse_role(node.at("role").get<std::string>())});
    }
    auto lookup = [&](const std::string& id) {
      const auto it = std::find(ids.begin(), ids.end(), id);
      if (it == ids.end()) throw InvalidArgument("edge refers to unknown node '" + id + "'");
      return static_cast<int>(it - ids.begin());
    };
    for (const auto& edge : j.at("edges")) {
      m.edges_.push_back({lookup(edge.at("from").get<std::string>()), lookup(edge.at("to").get<std::string>())});
    }
    m.declared_multicast_ = j.value("multicast_capacity", 0);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed network graph: ") + e.what());
  }
  m.index_roles();
  return m;
}

nlohmann::json NetworkModel::to_json() const {
  auto nodes = nlohmann::json::array();
  for (const auto& n : nodes_) nodes.push_back({{"id", n.id}, {"role", role_name(n.role)}});
  auto edges = nlohmann::json::array();
  for (const auto& e : edges_) edges.push_back({{"from", nodes_[e.from].id}, {"to", nodes_[e.to].id}});
  nlohmann::json j{{"nodes", nodes}, {"edges", edges}};
  if (is_abstract()) j["multicast_capacity"] = declared_multicast_;
  return j;
}

void NetworkModel::index_roles() {
  bobs_.clear();
  int alices = 0;
  for (int v = 0; v < static_cast<int>(nodes_.size()); ++v) {
    if (nodes_[v].role == NodeRole::alice) {
      alice_ = v;
      ++alices;
    } else if (nodes_[v].role == NodeRole::bob) {
      bobs_.push_back(v);
    }
  }
  if (alices != 1) throw InvalidArgument("network needs exactly one alice node");
  if (bobs_.empty()) throw InvalidArgument("network needs at least one bob node");
  n_parties_ = static_cast<int>(bobs_.size()) + 1;
  validate();
}

void NetworkModel::validate() const {
  if (is_abstract()) {
    if (declared_multicast_ < 1) throw InvalidArgument("network has no edges and no multicast capacity");
    return;
  }
  for (const auto& e : edges_) {
    if (e.from == e.to) throw InvalidArgument("self-loop at node '" + nodes_[e.from].id + "'");
  }
  // breadth-first reachability from Alice
  std::vector<std::vector<int>> adj(nodes_.size());
  for (const auto& e : edges_) adj[e.from].push_back(e.to);
  std::vector<bool> seen(nodes_.size());
  std::queue<int> frontier;
  frontier.push(alice_);
  seen[alice_] = true;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        frontier.push(w);
      }
    }
  }
  for (int b : bobs_) {
    if (!seen[b]) throw InvalidArgument("no path from alice to '" + nodes_[b].id + "'");
  }
}

bool NetworkModel::has_router() const {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.role == NodeRole::router; });
}

long NetworkModel::max_flow(int source, int sink) const {
  if (is_abstract()) throw InvalidArgument("abstract network has no graph");
  FlowNetwork net(static_cast<int>(nodes_.size()));
  for (const auto& e : edges_) net.add(e.from, e.to, 1);
  return net.solve(source, sink);
}

long NetworkModel::cut_to_subset(const std::vector<int>& bob_subset) const {
  if (is_abstract()) throw InvalidArgument("abstract network has no graph");
  const int sink = static_cast<int>(nodes_.size());
  FlowNetwork net(sink + 1);
  for (const auto& e : edges_) net.add(e.from, e.to, 1);
  const long unbounded = static_cast<long>(edges_.size()) + 1;
  for (int b : bob_subset) net.add(bobs_.at(b), sink, unbounded);
  return net.solve(alice_, sink);
}

int NetworkModel::multicast_capacity() const {
  if (is_abstract()) return declared_multicast_;
  long h = std::numeric_limits<long>::max();
  for (int b : bobs_) h = std::min(h, max_flow(alice_, b));
  return static_cast<int>(h);
}

namespace {

// Smallest cut(S)/|S| over non-empty Bob subsets, as a reduced fraction.
std::pair<long, long> routing_rate(const NetworkModel& m) {
  const int k = static_cast<int>(m.bobs().size());
  if (k > 20) throw InvalidArgument("routing rate enumeration limited to 20 bobs");
  long best_num = 0;
  long best_den = 0;
  for (std::uint32_t s = 1; s < (1U << k); ++s) {
    std::vector<int> subset;
    for (int b = 0; b < k; ++b) {
      if ((s >> b) & 1U) subset.push_back(b);
    }
    const long c = m.cut_to_subset(subset);
    const long size = static_cast<long>(subset.size());
    if (best_den == 0 || c * best_den < best_num * size) {
      best_num = c;
      best_den = size;
    }
  }
  const long g = std::gcd(best_num, best_den);
  return {best_num / g, best_den / g};
}

}  // namespace

double NetworkModel::twoqkd_rounds_per_use() const {
  if (is_abstract()) return static_cast<double>(declared_multicast_) / (n_parties_ - 1);
  const auto [num, den] = routing_rate(*this);
  return static_cast<double>(num) / static_cast<double>(den);
}

bool Schedule::within_capacity() const {
  return std::all_of(edge_loads.begin(), edge_loads.end(), [&](double l) { return l <= network_uses + 1e-12; });
}

nlohmann::json Schedule::to_json() const {
  return {{"protocol", to_string(protocol)}, {"network_uses", network_uses},     {"rounds", rounds},
          {"t_rep", t_rep()},               {"states_per_use", states_per_use()}, {"edge_loads", edge_loads},
          {"within_capacity", within_capacity()}};
}

Schedule schedule_star_router(int n_parties, Protocol protocol) {
  require_parties(n_parties);
  const auto bobs = static_cast<double>(n_parties - 1);
  Schedule s;
  s.protocol = protocol;
  // edge 0 is A->C, edges 1.. are C->B_k
  s.edge_loads.assign(n_parties, 1.0);
  if (protocol == Protocol::nqkd) return s;
  // one Bell pair per use through the bottleneck
  s.network_uses = bobs;
  s.edge_loads[0] = bobs;
  return s;
}

Schedule schedule_butterfly(Protocol protocol) {
  Schedule s;
  s.protocol = protocol;
  if (protocol == Protocol::nqkd) {
    s.rounds = 2.0;
    s.edge_loads.assign(9, 1.0);
  } else {
    // A->S1->B1 and A->S2->B2 carry the two Bell pairs
    s.edge_loads = {1, 1, 1, 0, 1, 0, 0, 0, 0};
  }
  return s;
}

Schedule schedule_multicast(int n_parties, int capacity, Protocol protocol) {
  require_parties(n_parties);
  if (capacity < 1) throw InvalidArgument("multicast capacity must be at least 1");
  Schedule s;
  s.protocol = protocol;
  s.rounds = protocol == Protocol::nqkd ? capacity : static_cast<double>(capacity) / (n_parties - 1);
  return s;
}

Schedule schedule_for(const NetworkModel& network, Protocol protocol) {
  if (network.is_abstract()) return schedule_multicast(network.n_parties(), network.multicast_capacity(), protocol);
  const auto& edges = network.edges();
  const int sink = static_cast<int>(network.nodes().size());
  Schedule s;
  s.protocol = protocol;
  s.edge_loads.assign(edges.size(), 0.0);

  if (protocol == Protocol::nqkd) {
    // a linear network code exists at the multicast capacity; each edge used
    // by some Bob's flow carries one coded qubit per use
    const int h = network.multicast_capacity();
    if (h < 1) throw InvalidArgument("alice cannot reach every bob");
    s.rounds = h;
    for (int b : network.bobs()) {
      FlowNetwork net(sink);
      std::vector<FlowEdge> handles;
      for (const auto& e : edges) handles.push_back(net.add(e.from, e.to, 1));
      net.solve(network.alice(), b);
      for (std::size_t i = 0; i < edges.size(); ++i) {
        if (net.flow(handles[i]) > 0) s.edge_loads[i] = 1.0;
      }
    }
    return s;
  }

  // route `rounds` distinct qubits to every Bob within `uses` uses
  const auto [rounds, uses] = routing_rate(network);
  FlowNetwork net(sink + 1);
  std::vector<FlowEdge> handles;
  for (const auto& e : edges) handles.push_back(net.add(e.from, e.to, uses));
  for (int b : network.bobs()) net.add(b, sink, rounds);
  const long routed = net.solve(network.alice(), sink);
  if (routed != rounds * static_cast<long>(network.bobs().size())) {
    throw NumericError("routing flow does not meet the cut bound");
  }
  s.network_uses = static_cast<double>(uses);
  s.rounds = static_cast<double>(rounds);
  for (std::size_t i = 0; i < edges.size(); ++i) s.edge_loads[i] = static_cast<double>(net.flow(handles[i]));
  return s;
}

double RouterDistributionReport::worst_fidelity() const {
  return std::min({fidelity_plus, fidelity_minus, fidelity_coherent});
}

nlohmann::json RouterDistributionReport::to_json() const {
  return {{"n", n_parties},
          {"probability_plus", probability_plus},
          {"probability_minus", probability_minus},
          {"fidelity_plus", fidelity_plus},
          {"fidelity_minus", fidelity_minus},
          {"fidelity_coherent", fidelity_coherent}};
}

RouterDistributionReport distribute_ghz_via_router(int n_parties) {
  require_parties(n_parties);
  const int n = n_parties + 1;  // C, A, B_1..B_{N-1}
  require_dense_cap(n);
  const double s = 1.0 / std::sqrt(2.0);
  const std::vector<std::array<Complex, 2>> plus(n, {Complex(s), Complex(s)});
  auto psi = DenseState::product(plus);
  // Bell pair between C and A, then the router entangles each B_k with C
  psi = psi.conjugated(cz(0, 1, n));
  for (int q = 2; q < n; ++q) psi = psi.conjugated(cz(0, q, n));

  const auto target = hadamard_ghz(n_parties);
  RouterDistributionReport r{.n_parties = n_parties, .state = target};
  auto [p_plus, branch_plus] = psi.measure_and_remove(0, gates::hadamard(), 0);
  auto [p_minus, branch_minus] = psi.measure_and_remove(0, gates::hadamard(), 1);
  branch_minus = branch_minus.with_gate(gates::pauli_x(), 1);
  r.probability_plus = p_plus;
  r.probability_minus = p_minus;
  r.fidelity_plus = branch_plus.fidelity_with(target);
  r.fidelity_minus = branch_minus.fidelity_with(target);

  // coherent feed-forward: rotate C to the Z basis, CNOT onto B_1, discard C
  const auto coherent = psi.with_gate(gates::hadamard(), 0).conjugated(cnot(0, 2, n)).traced_out(0);
  r.fidelity_coherent = coherent.fidelity_with(target);
  r.state = std::move(branch_plus);
  return r;
}

nlohmann::json EntanglementBoundReport::to_json() const {
  return {{"n", n_parties},
          {"required", required},
          {"bound_per_use", bound_per_use},
          {"uses_needed", uses_needed},
          {"dense_checked", dense_checked}};
}

double bell_pairs_entanglement(int pairs) {
  if (pairs < 1) throw InvalidArgument("need at least one Bell pair");
  const int n = 2 * pairs;  // A side: qubits 0..pairs-1, partner of q is q+pairs
  require_dense_cap(n);
  const double s = 1.0 / std::sqrt(2.0);
  const std::vector<std::array<Complex, 2>> init(n, {Complex(1.0), Complex(0.0)});
  auto psi = DenseState::product(init);
  for (int q = 0; q < pairs; ++q) {
    psi = psi.with_gate({Complex(s), Complex(s), Complex(s), Complex(-s)}, q).conjugated(cnot(q, q + pairs, n));
  }
  std::vector<int> a_side(pairs);
  std::iota(a_side.begin(), a_side.end(), 0);
  return psi.reduced_to(a_side).entropy();
}

EntanglementBoundReport entanglement_bound_check(int n_parties) {
  require_parties(n_parties);
  EntanglementBoundReport r;
  r.n_parties = n_parties;
  const int pairs = n_parties - 1;
  if (2 * pairs <= dense_qubit_cap()) {
    r.required = bell_pairs_entanglement(pairs);
    r.dense_checked = true;
  } else {
    r.required = pairs;
  }
  // one qubit across the A|B cut raises E_{A|B} by at most 1
  r.uses_needed = static_cast<int>(std::ceil(r.required / r.bound_per_use - 1e-9));
  return r;
}

nlohmann::json RateComparison::to_json() const {
  nlohmann::json j{{"nqkd", nqkd.to_json()},
                   {"twoqkd", twoqkd.to_json()},
                   {"nqkd_schedule", nqkd_schedule.to_json()},
                   {"twoqkd_schedule", twoqkd_schedule.to_json()},
                   {"advantage", advantage}};
  j["ratio"] = ratio ? nlohmann::json(*ratio) : nlohmann::json(nullptr);
  return j;
}

RateComparison compare_rates(const NetworkModel& network, const NoiseConfig& noise) {
  const int n = network.n_parties();
  RateComparison c;
  c.nqkd_schedule = schedule_for(network, Protocol::nqkd);
  c.twoqkd_schedule = schedule_for(network, Protocol::twoqkd);
  const double t_n = c.nqkd_schedule.t_rep();
  const double t_2 = c.twoqkd_schedule.t_rep();
  switch (noise.model) {
    case NoiseConfig::Model::gate: {
      const auto topology = network.has_router() ? Topology::router : Topology::star;
      c.nqkd = nqkd_gate_rate(n, noise.gate.f_gate, topology, t_n);
      c.twoqkd = twoqkd_gate_rate(n, noise.gate.f_gate, t_2);
      break;
    }
    case NoiseConfig::Model::channel:
      c.nqkd = nqkd_channel_rate(n, noise.channel.f_channel, t_n);
      c.twoqkd = twoqkd_channel_rate(n, noise.channel.f_channel, t_2);
      break;
    case NoiseConfig::Model::none:
      c.nqkd = nqkd_channel_rate(n, 0.0, t_n);
      c.twoqkd = twoqkd_channel_rate(n, 0.0, t_2);
      break;
  }
  c.advantage = c.nqkd.rate > c.twoqkd.rate;
  if (c.twoqkd.rate > 0.0) c.ratio = c.nqkd.rate / c.twoqkd.rate;
  return c;
}

}  // namespace nqkd
