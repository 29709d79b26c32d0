#include "nqkd/noise.hpp"

#include <boost/math/special_functions/binomial.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "nqkd/error.hpp"

namespace nqkd {
namespace {

constexpr int kMaxPatternSumParties = 20;
constexpr std::uint64_t kMaxExhaustiveOrders = 40320;  // 8!

double binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) return 0.0;
  return boost::math::binomial_coefficient<double>(static_cast<unsigned>(n), static_cast<unsigned>(k));
}

void require_parties(int n) {
  if (n < 2) throw InvalidArgument("need at least two parties");
}

}  // namespace

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
}

GatePattern::GatePattern(int n_gates, std::uint64_t successes) : n_gates_(n_gates), successes_(successes) {
  if (n_gates < 1 || n_gates > 63) throw InvalidArgument("gate pattern needs 1..63 gates");
  if (successes >> n_gates) throw InvalidArgument("gate pattern has bits beyond its length");
}

GatePattern GatePattern::parse(const std::string& bits) {
  if (bits.empty()) throw InvalidArgument("empty gate pattern");
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw InvalidArgument("gate pattern must contain only 0 and 1");
    if (bits[i] == '1') s |= std::uint64_t{1} << i;
  }
  return {static_cast<int>(bits.size()), s};
}

bool GatePattern::succeeded(int gate) const {
  if (gate < 1 || gate > n_gates_) throw InvalidArgument("gate index out of range");
  return (successes_ >> (gate - 1)) & 1U;
}

int GatePattern::weight() const { return std::popcount(successes_); }

std::string GatePattern::to_string() const {
  std::string s(n_gates_, '0');
  for (int i = 0; i < n_gates_; ++i) {
    if ((successes_ >> i) & 1U) s[i] = '1';
  }
  return s;
}

int GatePattern::block_count() const { return nqkd::block_count(to_string() + "1"); }

double GatePattern::prefactor() const {
  return all_succeeded() ? 1.0 : std::ldexp(1.0, -block_count());
}

int block_count(const std::string& x1) {
  if (x1.empty()) throw InvalidArgument("block count of an empty string");
  int count = 0;
  char prev = '0';
  for (char c : x1) {
    if (c == '0') {
      ++count;
    } else if (c == '1') {
      if (prev != '1') ++count;
    } else {
      throw InvalidArgument("bit string must contain only 0 and 1");
    }
    prev = c;
  }
  return count;
}

double max_depolarized_qber(int n_parties) {
  require_parties(n_parties);
  // (2^N - 2)/(2^N - 1) = 1 - 1/(2^N - 1)
  return 1.0 - 1.0 / (std::ldexp(1.0, n_parties) - 1.0);
}

GhzDiagonalState depolarized_state(int n_parties, double qber) {
  require_parties(n_parties);
  if (!(qber >= 0.0 && qber <= max_depolarized_qber(n_parties) + 1e-15)) {
    throw InvalidArgument("QBER outside the admissible range of a depolarized state");
  }
  const auto count = std::uint64_t{1} << (n_parties - 1);
  const double other = qber / (std::ldexp(1.0, n_parties) - 2.0);
  std::vector<double> plus(count, other), minus(count, other);
  // remaining weight, so that qber_z reproduces the argument exactly
  plus[0] = 1.0 - qber - other;
  return {n_parties, std::move(plus), std::move(minus)};
}

Lambda0 lambda0_star_pattern_sum(int n_parties, double f_gate) {
  require_parties(n_parties);
  require_probability(f_gate, "f_G");
  if (n_parties > kMaxPatternSumParties + 6) throw InvalidArgument("pattern sum limited to N <= 26");
  const int gates = n_parties - 1;
  double plus = 0.0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << gates); ++x) {
    const GatePattern pattern(gates, x);
    const int w = pattern.weight();
    plus += pattern.prefactor() * std::pow(f_gate, gates - w) * std::pow(1.0 - f_gate, w);
  }
  return {plus, plus - std::pow(1.0 - f_gate, gates)};
}

double weight_prefactor_sum(int n_parties, int weight) {
  require_parties(n_parties);
  if (weight < 0 || weight > n_parties - 2) throw InvalidArgument("weight must lie in [0, N-2]");
  const int n = n_parties;
  const int w = weight;
  double acc = 0.0;
  for (int beta = n - w; beta <= n; ++beta) {
    acc += binomial(w, n - beta) * binomial(n - w - 1, beta - n + w) * std::ldexp(1.0, -beta);
  }
  return acc;
}

Lambda0 lambda0_star_compact(int n_parties, double f_gate) {
  require_parties(n_parties);
  require_probability(f_gate, "f_G");
  const int gates = n_parties - 1;
  double minus = 0.0;
  for (int w = 0; w <= n_parties - 2; ++w) {
    minus += weight_prefactor_sum(n_parties, w) * std::pow(f_gate, gates - w) * std::pow(1.0 - f_gate, w);
  }
  return {std::pow(1.0 - f_gate, gates) + minus, minus};
}

Lambda0 lambda0_star(int n_parties, double f_gate) {
  const auto compact = lambda0_star_compact(n_parties, f_gate);
  if (n_parties <= kMaxPatternSumParties) {
    const auto summed = lambda0_star_pattern_sum(n_parties, f_gate);
    if (std::abs(summed.first - compact.first) > 1e-12 || std::abs(summed.second - compact.second) > 1e-12) {
      throw NumericError("pattern sum and compact form of lambda_0 disagree");
    }
  }
  return compact;
}

Lambda0 lambda0_router(int n_parties, double f_gate) {
  const auto [plus, minus] = lambda0_star(n_parties, f_gate);
  const double mixed = 0.5 * f_gate * (plus + minus);
  return {(1.0 - f_gate) * plus + mixed, (1.0 - f_gate) * minus + mixed};
}

Lambda0 lambda0(int n_parties, const GateNoise& noise) {
  return noise.topology == Topology::router ? lambda0_router(n_parties, noise.f_gate)
                                            : lambda0_star(n_parties, noise.f_gate);
}

double qab_average(int n_parties, double f_gate) {
  require_parties(n_parties);
  require_probability(f_gate, "f_G");
  if (f_gate == 0.0) return 0.0;
  const double n = n_parties;
  return (std::pow(1.0 - f_gate, n_parties) + f_gate * n - 1.0) / (2.0 * f_gate * (n - 1.0));
}

double channel_qber(int n_parties, double f_channel) {
  require_parties(n_parties);
  require_probability(f_channel, "f_C");
  const double white = 1.0 - std::ldexp(1.0, 1 - n_parties);  // (2^N - 2)/2^N
  return white * (1.0 - std::pow(1.0 - f_channel, n_parties));
}

double local_channel_qber(int n_parties, double f_channel) {
  require_parties(n_parties);
  require_probability(f_channel, "f_C");
  const int n = n_parties;
  double q = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double agree = k < n ? std::ldexp(1.0, -k) : std::ldexp(1.0, 1 - n);
    q += binomial(n, k) * std::pow(f_channel, k) * std::pow(1.0 - f_channel, n - k) * (1.0 - agree);
  }
  return q;
}

DenseState apply_channel_noise(const DenseState& psi, double f_channel, std::optional<std::vector<int>> qubits) {
  require_probability(f_channel, "f_C");
  require_dense_cap(psi.n_qubits());
  std::vector<int> targets;
  if (qubits) {
    targets = *qubits;
  } else {
    targets.resize(psi.n_qubits());
    std::iota(targets.begin(), targets.end(), 0);
  }
  auto rho = psi.to_mixed();
  for (int q : targets) {
    const std::array<int, 1> one{q};
    rho = rho.mixed_with(rho.with_qubits_replaced(one), f_channel);
  }
  return rho;
}

DenseState prep_circuit_pattern(int n_parties, const GatePattern& pattern, const std::vector<int>& order,
                                bool alice_gate_failed) {
  require_parties(n_parties);
  require_dense_cap(n_parties);
  const int gates = n_parties - 1;
  if (pattern.n_gates() != gates || static_cast<int>(order.size()) != gates) {
    throw InvalidArgument("pattern and gate order must cover the N-1 gates");
  }
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<std::array<Complex, 2>> qubits(n_parties, {Complex{1.0}, Complex{0.0}});
  qubits[0] = {Complex{s}, Complex{s}};
  auto rho = DenseState::product(qubits).to_mixed();
  if (alice_gate_failed) {
    const std::array<int, 1> alice{0};
    rho = rho.with_qubits_replaced(alice);
  }
  for (int g = 1; g <= gates; ++g) {
    const int target = order[g - 1];
    if (pattern.succeeded(g)) {
      rho = rho.conjugated(cnot(0, target, n_parties));
    } else {
      const std::array<int, 2> pair{0, target};
      rho = rho.with_qubits_replaced(pair);
    }
  }
  return rho;
}

DenseState simulate_prep_circuit(int n_parties, const GateNoise& noise, const GateOrderSpec& spec) {
  require_parties(n_parties);
  require_dense_cap(n_parties);
  require_probability(noise.f_gate, "f_G");
  const int gates = n_parties - 1;
  const double f = noise.f_gate;

  std::vector<int> base(gates);
  std::iota(base.begin(), base.end(), 1);
  std::vector<std::vector<int>> orders;
  switch (spec.mode) {
    case GateOrderSpec::Mode::fixed:
      orders.push_back(base);
      break;
    case GateOrderSpec::Mode::all: {
      std::uint64_t count = 1;
      for (int i = 2; i <= gates; ++i) count *= static_cast<std::uint64_t>(i);
      if (count > kMaxExhaustiveOrders) throw InvalidArgument("too many gate orders to enumerate; sample instead");
      auto order = base;
      do {
        orders.push_back(order);
      } while (std::next_permutation(order.begin(), order.end()));
      break;
    }
    case GateOrderSpec::Mode::sampled: {
      if (spec.samples == 0) throw InvalidArgument("sampled gate orders need a positive count");
      std::mt19937_64 rng(spec.seed);
      for (std::size_t i = 0; i < spec.samples; ++i) {
        auto order = base;
        std::shuffle(order.begin(), order.end(), rng);
        orders.push_back(std::move(order));
      }
      break;
    }
  }

  struct Branch {
    bool alice_failed;
    double weight;
  };
  std::vector<Branch> branches{{false, 1.0}};
  if (noise.topology == Topology::router) branches = {{false, 1.0 - f}, {true, f}};

  const auto d = std::size_t{1} << n_parties;
  std::vector<Complex> acc(d * d);
  const double order_weight = 1.0 / static_cast<double>(orders.size());
  for (const auto& order : orders) {
    for (const auto& branch : branches) {
      if (branch.weight == 0.0) continue;
      for (std::uint64_t x = 0; x < (std::uint64_t{1} << gates); ++x) {
        const GatePattern pattern(gates, x);
        const int w = pattern.weight();
        const double weight =
            order_weight * branch.weight * std::pow(f, gates - w) * std::pow(1.0 - f, w);
        if (weight == 0.0) continue;
        const auto m = prep_circuit_pattern(n_parties, pattern, order, branch.alice_failed).density_matrix();
        for (std::size_t i = 0; i < m.size(); ++i) acc[i] += weight * m[i];
      }
    }
  }
  return DenseState::from_matrix(n_parties, std::move(acc));
}

nlohmann::json NoiseConfig::to_json() const {
  switch (model) {
    case Model::gate:
      return {{"model", "gate"},
              {"fG", gate.f_gate},
              {"topology", gate.topology == Topology::router ? "router" : "star"}};
    case Model::channel:
      return {{"model", "channel"}, {"fC", channel.f_channel}};
    case Model::none:
      break;
  }
  return {{"model", "none"}};
}

NoiseConfig NoiseConfig::from_json(const nlohmann::json& j) {
  NoiseConfig cfg;
  try {
    const auto model = j.at("model").get<std::string>();
    if (model == "gate") {
      cfg.model = Model::gate;
      cfg.gate.f_gate = j.at("fG").get<double>();
      const auto topo = j.value("topology", std::string("star"));
      if (topo == "star") {
        cfg.gate.topology = Topology::star;
      } else if (topo == "router") {
        cfg.gate.topology = Topology::router;
      } else {
        throw InvalidArgument("unknown topology '" + topo + "'");
      }
      require_probability(cfg.gate.f_gate, "fG");
    } else if (model == "channel") {
      cfg.model = Model::channel;
      cfg.channel.f_channel = j.at("fC").get<double>();
      require_probability(cfg.channel.f_channel, "fC");
    } else if (model == "none") {
      cfg.model = Model::none;
    } else {
      throw InvalidArgument("unknown noise model '" + model + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed noise config: ") + e.what());
  }
  return cfg;
}

}  // namespace nqkd
