#include "nqkd/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "nqkd/error.hpp"
#include "nqkd/noise.hpp"

namespace nqkd {
namespace {

std::uint64_t all_parties(int n) { return (std::uint64_t{1} << n) - 1; }

void require_protocol_parties(int n) {
  if (n < 2 || n > kMaxProtocolParties) throw InvalidArgument("protocol simulation supports 2..63 parties");
}

// Inverse-CDF sampling over a fixed table.
class CumulativeTable {
 public:
  CumulativeTable() = default;
  explicit CumulativeTable(const std::vector<double>& weights) : cdf_(weights.size()) {
    std::partial_sum(weights.begin(), weights.end(), cdf_.begin());
    total_ = cdf_.empty() ? 0.0 : cdf_.back();
    if (!(total_ > 0.0)) throw InvalidArgument("sampling table has no weight");
  }
  std::size_t draw(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, total_)(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
  double total_ = 0.0;
};

// Dense register index (qubit 0 = MSB) to outcome mask (party p = bit p).
std::uint64_t index_to_mask(std::uint64_t index, int n) {
  std::uint64_t mask = 0;
  for (int q = 0; q < n; ++q) {
    if (basis_bit(index, q, n)) mask |= std::uint64_t{1} << q;
  }
  return mask;
}

class DenseSampler final : public RoundSampler {
 public:
  explicit DenseSampler(const DenseState& state) : state_(state) {
    state_.validate(1e-10);
    require_protocol_parties(state_.n_qubits());
    z_table_ = CumulativeTable(state_.z_probabilities());
  }

  int n_parties() const override { return state_.n_qubits(); }

  RoundRecord sample_z(Rng& rng) const override {
    const int n = n_parties();
    return {RoundType::z, n, 0, index_to_mask(z_table_.draw(rng), n)};
  }

  RoundRecord sample_xy(std::uint64_t y_mask, Rng& rng) const override {
    const int n = n_parties();
    const auto& entry = cached(y_mask);
    return {RoundType::xy, n, y_mask, entry.masks[entry.table.draw(rng)]};
  }

  std::vector<double> xy_distribution(std::uint64_t y_mask) const override {
    const auto& entry = cached(y_mask);
    std::vector<double> out(entry.probabilities.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[entry.masks[i]] = entry.probabilities[i];
    return out;
  }

 private:
  struct Entry {
    std::vector<double> probabilities;  // by register index
    std::vector<std::uint64_t> masks;   // register index -> outcome mask
    CumulativeTable table;
  };

  const Entry& cached(std::uint64_t y_mask) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(y_mask);
    if (it != cache_.end()) return it->second;
    const int n = n_parties();
    auto rotated = state_;
    for (int q = 0; q < n; ++q) {
      rotated = rotated.with_gate((y_mask >> q) & 1U ? gates::y_to_z() : gates::hadamard(), q);
    }
    Entry e;
    e.probabilities = rotated.z_probabilities();
    for (auto& p : e.probabilities) p = std::max(p, 0.0);
    e.masks.resize(e.probabilities.size());
    for (std::uint64_t x = 0; x < e.masks.size(); ++x) e.masks[x] = index_to_mask(x, n);
    e.table = CumulativeTable(e.probabilities);
    return cache_.emplace(y_mask, std::move(e)).first->second;
  }

  DenseState state_;
  CumulativeTable z_table_;
  mutable std::mutex mutex_;
  mutable std::map<std::uint64_t, Entry> cache_;
};

class GhzSampler final : public RoundSampler {
 public:
  explicit GhzSampler(const GhzDiagonalState& state) : state_(state) {
    require_protocol_parties(state_.n_parties());
    std::vector<double> weights = state_.lambda_plus();
    weights.insert(weights.end(), state_.lambda_minus().begin(), state_.lambda_minus().end());
    for (auto& w : weights) w = std::max(w, 0.0);
    components_ = CumulativeTable(weights);
    // Z rounds only see lambda_j^+ + lambda_j^-
    std::vector<double> strings(state_.n_strings());
    for (std::uint64_t j = 0; j < strings.size(); ++j) strings[j] = weights[j] + weights[j + strings.size()];
    strings_ = CumulativeTable(strings);
  }

  int n_parties() const override { return state_.n_parties(); }

  RoundRecord sample_z(Rng& rng) const override {
    const int n = n_parties();
    const auto j = strings_.draw(rng);
    const auto alice = std::bernoulli_distribution(0.5)(rng) ? std::uint64_t{1} : 0;
    // Bob k disagrees with Alice exactly when bit k of j is set
    std::uint64_t mask = alice;
    for (int k = 1; k < n; ++k) {
      const auto bit = static_cast<std::uint64_t>(GhzBasisIndex::bit(j, k, n)) ^ alice;
      mask |= bit << k;
    }
    return {RoundType::z, n, 0, mask};
  }

  RoundRecord sample_xy(std::uint64_t y_mask, Rng& rng) const override {
    const int n = n_parties();
    const auto c = components_.draw(rng);
    const auto j = c % state_.n_strings();
    const int sigma = c < state_.n_strings() ? 1 : -1;
    std::uint64_t mask = std::uniform_int_distribution<std::uint64_t>(0, all_parties(n))(rng);
    const int mean = product_mean(j, sigma, y_mask);
    if (mean != 0) {
      const int parity = std::popcount(mask) % 2 == 0 ? 1 : -1;
      if (parity != mean) mask ^= 1U;  // fix Alice's outcome to match the product
    }
    return {RoundType::xy, n, y_mask, mask};
  }

  std::vector<double> xy_distribution(std::uint64_t y_mask) const override {
    const int n = n_parties();
    if (n > 20) throw InvalidArgument("exact outcome distribution limited to N <= 20");
    double signed_weight = 0.0;  // E[product of outcomes]
    for (std::uint64_t j = 0; j < state_.n_strings(); ++j) {
      signed_weight += state_.lambda(j, Sign::plus) * product_mean(j, 1, y_mask) +
                       state_.lambda(j, Sign::minus) * product_mean(j, -1, y_mask);
    }
    std::vector<double> out(std::uint64_t{1} << n);
    const double base = std::ldexp(1.0, -n);
    for (std::uint64_t s = 0; s < out.size(); ++s) {
      const int parity = std::popcount(s) % 2 == 0 ? 1 : -1;
      out[s] = base * (1.0 + parity * signed_weight);
    }
    return out;
  }

 private:
  // sigma f(kappa_tilde) (-1)^m with m = number of Y-measuring Bobs whose j-bit is set
  int product_mean(std::uint64_t j, int sigma, std::uint64_t y_mask) const {
    const int n = n_parties();
    const int f = f_sign(std::popcount(y_mask));
    if (f == 0) return 0;
    int m = 0;
    for (int k = 1; k < n; ++k) {
      if ((y_mask >> k) & 1U) m += GhzBasisIndex::bit(j, k, n);
    }
    return sigma * f * (m % 2 == 0 ? 1 : -1);
  }

  GhzDiagonalState state_;
  CumulativeTable components_;
  CumulativeTable strings_;
};

std::uint64_t random_y_mask(int n, Rng& rng) {
  return std::uniform_int_distribution<std::uint64_t>(0, all_parties(n))(rng);
}

std::uint64_t announced_size(const ProtocolConfig& config, std::uint64_t second_type) {
  switch (config.announced.mode) {
    case AnnouncedZ::Mode::match_second_type:
      return second_type;
    case AnnouncedZ::Mode::preshared_length:
      return static_cast<std::uint64_t>(std::ceil(static_cast<double>(config.rounds) * binary_entropy(config.p_p)));
    case AnnouncedZ::Mode::fixed:
      break;
  }
  return config.announced.count;
}

std::vector<RoundRecord> run_shard(const ProtocolConfig& config, const RoundSampler& sampler,
                                   std::uint64_t rounds, unsigned shard) {
  std::seed_seq seq{config.seed, static_cast<std::uint64_t>(shard), std::uint64_t{0x5eed}};
  Rng rng(seq);
  std::bernoulli_distribution second_type(config.p_p);
  std::vector<RoundRecord> out;
  out.reserve(rounds);
  for (std::uint64_t r = 0; r < rounds; ++r) {
    if (second_type(rng)) {
      out.push_back(config.basis_rule == BasisRule::alice_rule ? sample_round_alice_rule(sampler, rng)
                                                               : sample_round(sampler, RoundType::xy, rng));
    } else {
      out.push_back(sampler.sample_z(rng));
    }
  }
  return out;
}

std::vector<std::uint64_t> pack_bits(std::span<const std::uint8_t> bits, std::size_t words) {
  std::vector<std::uint64_t> packed(words);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] & 1U) packed[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  return packed;
}

// 64 bits of `packed` starting at bit `offset` (zero beyond the end).
std::uint64_t window64(const std::vector<std::uint64_t>& packed, std::size_t offset) {
  const std::size_t w = offset / 64;
  const unsigned shift = offset % 64;
  const std::uint64_t lo = w < packed.size() ? packed[w] : 0;
  if (shift == 0) return lo;
  const std::uint64_t hi = w + 1 < packed.size() ? packed[w + 1] : 0;
  return (lo >> shift) | (hi << (64 - shift));
}

}  // namespace

MeasurementBasis RoundRecord::basis(int party) const {
  if (type == RoundType::z) return MeasurementBasis::z;
  return (y_mask >> party) & 1U ? MeasurementBasis::y : MeasurementBasis::x;
}

int RoundRecord::kappa_tilde() const { return type == RoundType::z ? 0 : std::popcount(y_mask); }

int RoundRecord::parity() const { return std::popcount(minus_mask) % 2 == 0 ? 1 : -1; }

nlohmann::json RoundRecord::to_json() const {
  std::string bases(n_parties, 'Z');
  std::vector<int> outcomes(n_parties);
  for (int p = 0; p < n_parties; ++p) {
    const auto b = basis(p);
    bases[p] = b == MeasurementBasis::x ? 'X' : (b == MeasurementBasis::y ? 'Y' : 'Z');
    outcomes[p] = outcome(p);
  }
  return {{"type", type == RoundType::z ? "Z" : "XY"},
          {"bases", bases},
          {"outcomes", outcomes},
          {"kappa_tilde", kappa_tilde()},
          {"kept", kept()}};
}

RoundRecord RoundRecord::from_json(const nlohmann::json& j) {
  RoundRecord r;
  try {
    const auto type = j.at("type").get<std::string>();
    if (type != "Z" && type != "XY") throw InvalidArgument("unknown round type '" + type + "'");
    r.type = type == "Z" ? RoundType::z : RoundType::xy;
    const auto bases = j.at("bases").get<std::string>();
    const auto outcomes = j.at("outcomes").get<std::vector<int>>();
    if (bases.size() != outcomes.size()) throw InvalidArgument("bases and outcomes differ in length");
    r.n_parties = static_cast<int>(bases.size());
    require_protocol_parties(r.n_parties);
    for (int p = 0; p < r.n_parties; ++p) {
      const char b = bases[p];
      if (r.type == RoundType::z ? b != 'Z' : (b != 'X' && b != 'Y')) {
        throw InvalidArgument("basis inconsistent with round type");
      }
      if (b == 'Y') r.y_mask |= std::uint64_t{1} << p;
      if (outcomes[p] != 1 && outcomes[p] != -1) throw InvalidArgument("outcomes must be +1 or -1");
      if (outcomes[p] == -1) r.minus_mask |= std::uint64_t{1} << p;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed round record: ") + e.what());
  }
  return r;
}

int f_sign(int kappa_tilde) {
  if (kappa_tilde < 0) throw InvalidArgument("kappa_tilde must be non-negative");
  if (kappa_tilde % 2 != 0) return 0;
  return kappa_tilde % 4 == 0 ? 1 : -1;
}

std::unique_ptr<RoundSampler> make_dense_sampler(const DenseState& state) {
  return std::make_unique<DenseSampler>(state);
}

std::unique_ptr<RoundSampler> make_ghz_sampler(const GhzDiagonalState& state) {
  return std::make_unique<GhzSampler>(state);
}

std::unique_ptr<RoundSampler> make_sampler(const GhzDiagonalState& state) {
  if (state.n_parties() <= dense_qubit_cap()) return make_dense_sampler(state.to_dense());
  return make_ghz_sampler(state);
}

RoundRecord sample_round(const RoundSampler& sampler, RoundType type, Rng& rng) {
  if (type == RoundType::z) return sampler.sample_z(rng);
  return sampler.sample_xy(random_y_mask(sampler.n_parties(), rng), rng);
}

RoundRecord sample_round_alice_rule(const RoundSampler& sampler, Rng& rng) {
  const int n = sampler.n_parties();
  // Bobs choose freely; Alice's basis makes the number of Y measurements even
  std::uint64_t mask = random_y_mask(n, rng) & ~std::uint64_t{1};
  if (std::popcount(mask) % 2 != 0) mask |= 1U;
  return sampler.sample_xy(mask, rng);
}

QxEstimate estimate_qx(std::span<const RoundRecord> records) {
  QxEstimate est;
  for (const auto& r : records) {
    if (r.type != RoundType::xy) throw InvalidArgument("Q_X estimation needs second-type rounds only");
    const int sign = f_sign(r.kappa_tilde());
    if (sign == 0) continue;
    // Alice's flip for kappa_tilde mod 4 == 2 is the sign factor
    if (sign * r.parity() > 0) {
      ++est.n_plus;
    } else {
      ++est.n_minus;
    }
  }
  const auto kept = est.n_plus + est.n_minus;
  if (kept == 0) throw InvalidArgument("no second-type rounds with even kappa_tilde");
  est.x_parity = (static_cast<double>(est.n_plus) - static_cast<double>(est.n_minus)) / static_cast<double>(kept);
  est.q_x = 0.5 * (1.0 - est.x_parity);
  return est;
}

QzEstimate estimate_qz(std::span<const RoundRecord> records) {
  if (records.empty()) throw InvalidArgument("no announced Z rounds");
  const int n = records.front().n_parties;
  QzEstimate est;
  std::vector<std::uint64_t> differs(n - 1);
  std::uint64_t any = 0;
  for (const auto& r : records) {
    if (r.type != RoundType::z || r.n_parties != n) throw InvalidArgument("Q_Z estimation needs Z rounds of one size");
    const auto alice = r.minus_mask & 1U;
    const auto alice_all = alice ? all_parties(n) : 0;
    const auto disagree = (r.minus_mask ^ alice_all) & ~std::uint64_t{1};
    if (disagree) ++any;
    for (int k = 1; k < n; ++k) differs[k - 1] += (disagree >> k) & 1U;
  }
  est.rounds = records.size();
  const double total = static_cast<double>(records.size());
  est.q_z = static_cast<double>(any) / total;
  est.q_ab.resize(n - 1);
  for (int k = 0; k < n - 1; ++k) est.q_ab[k] = static_cast<double>(differs[k]) / total;
  return est;
}

FlipResult classical_depolarize(std::span<const RoundRecord> z_records, Rng& rng) {
  FlipResult out;
  out.records.assign(z_records.begin(), z_records.end());
  out.flipped.resize(z_records.size());
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    if (r.type != RoundType::z) throw InvalidArgument("classical depolarization acts on Z rounds");
    out.flipped[i] = coin(rng);
    if (out.flipped[i]) r.minus_mask ^= all_parties(r.n_parties);
  }
  return out;
}

int StateSource::n_parties() const {
  return std::visit(
      [](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, GhzDiagonalState>) {
          return s.n_parties();
        } else {
          return s.n_qubits();
        }
      },
      state);
}

std::unique_ptr<RoundSampler> StateSource::sampler() const {
  return std::visit(
      [](const auto& s) -> std::unique_ptr<RoundSampler> {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, GhzDiagonalState>) {
          return make_sampler(s);
        } else {
          return make_dense_sampler(s);
        }
      },
      state);
}

void ProtocolConfig::validate() const {
  require_protocol_parties(n_parties);
  if (!(p_p > 0.0 && p_p < 1.0)) throw InvalidArgument("p_p must lie in (0, 1)");
  if (rounds < 1) throw InvalidArgument("need at least one round");
  if (shards < 1) throw InvalidArgument("need at least one shard");
  if (source.n_parties() != n_parties) throw InvalidArgument("state size does not match the number of parties");
}

ProtocolConfig ProtocolConfig::from_json(const nlohmann::json& j) {
  ProtocolConfig c;
  try {
    c.n_parties = j.at("n").get<int>();
    c.rounds = j.at("rounds").get<std::uint64_t>();
    c.p_p = j.value("p_p", 0.05);
    c.seed = j.value("seed", std::uint64_t{0});
    c.shards = j.value("shards", 1U);
    c.privacy_amplification = j.value("privacy_amplification", false);
    c.keep_transcript = j.value("transcript", true);
    const auto rule = j.value("basis_rule", std::string("independent"));
    if (rule == "independent") {
      c.basis_rule = BasisRule::independent;
    } else if (rule == "alice_rule") {
      c.basis_rule = BasisRule::alice_rule;
    } else {
      throw InvalidArgument("unknown basis rule '" + rule + "'");
    }
    if (j.contains("announced_z")) {
      const auto& a = j.at("announced_z");
      if (a.is_number_integer()) {
        if (a.get<std::int64_t>() < 0) throw InvalidArgument("announced_z count must be non-negative");
        c.announced = {AnnouncedZ::Mode::fixed, a.get<std::uint64_t>()};
      } else if (a == "match") {
        c.announced = {AnnouncedZ::Mode::match_second_type, 0};
      } else if (a == "preshared") {
        c.announced = {AnnouncedZ::Mode::preshared_length, 0};
      } else {
        throw InvalidArgument("announced_z must be \"match\", \"preshared\" or a count");
      }
    }
    const auto& s = j.at("state");
    const auto kind = s.at("kind").get<std::string>();
    if (kind == "depolarized") {
      c.source.state = depolarized_state(c.n_parties, s.at("qber").get<double>());
    } else if (kind == "ghz_diagonal") {
      auto copy = s;
      copy["n"] = c.n_parties;
      c.source.state = GhzDiagonalState::from_json(copy);
    } else if (kind == "gate") {
      const auto noise = NoiseConfig::from_json({{"model", "gate"},
                                                 {"fG", s.at("fG").get<double>()},
                                                 {"topology", s.value("topology", std::string("star"))}});
      c.source.state = ghz_diagonal_from_dense(simulate_prep_circuit(c.n_parties, noise.gate, GateOrderSpec::all()));
    } else if (kind == "channel") {
      const auto ghz = ghz_basis_vector(c.n_parties, {0, Sign::plus});
      c.source.state = ghz_diagonal_from_dense(apply_channel_noise(ghz, s.at("fC").get<double>()));
    } else {
      throw InvalidArgument("unknown state kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed protocol config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json AccountingLedger::to_json() const {
  return {{"preshared_key_bits", preshared_key_bits},
          {"second_type_rounds", second_type_rounds},
          {"discarded_second_type_rounds", discarded_second_type_rounds},
          {"z_rounds", z_rounds},
          {"announced_z_rounds", announced_z_rounds},
          {"key_rounds", key_rounds},
          {"error_correction_bits", error_correction_bits}};
}

AccountingLedger presharedkey_and_announcement_accounting(const ProtocolConfig& config) {
  config.validate();
  AccountingLedger ledger;
  const double l = static_cast<double>(config.rounds);
  ledger.preshared_key_bits = l * binary_entropy(config.p_p);
  ledger.second_type_rounds = static_cast<std::uint64_t>(std::llround(l * config.p_p));
  ledger.discarded_second_type_rounds =
      config.basis_rule == BasisRule::alice_rule ? 0 : ledger.second_type_rounds / 2;
  ledger.z_rounds = config.rounds - ledger.second_type_rounds;
  ledger.announced_z_rounds = std::min(ledger.z_rounds, announced_size(config, ledger.second_type_rounds));
  ledger.key_rounds = ledger.z_rounds - ledger.announced_z_rounds;
  return ledger;
}

nlohmann::json EstimationResult::to_json() const {
  return {{"q_z", z.q_z},
          {"q_ab", z.q_ab},
          {"announced_z_rounds", z.rounds},
          {"q_x", x.q_x},
          {"x_parity", x.x_parity},
          {"n_plus", x.n_plus},
          {"n_minus", x.n_minus},
          {"qx_projected", qx_projected}};
}

nlohmann::json ProtocolResult::summary_json() const {
  return {{"estimates", estimates.to_json()},
          {"rate", rate.to_json()},
          {"key_length_estimate", key_length_estimate},
          {"key_length", key_length},
          {"key_length_zero", key_length <= 0.0},
          {"ledger", ledger.to_json()},
          {"final_key_bits", final_key.size()}};
}

ProtocolResult run_protocol(const ProtocolConfig& config) {
  config.validate();
  const auto sampler = config.source.sampler();

  // rounds are split into contiguous shards, each with its own seeded stream
  std::vector<std::vector<RoundRecord>> shard_records(config.shards);
  const std::uint64_t per_shard = config.rounds / config.shards;
  const std::uint64_t extra = config.rounds % config.shards;
  auto shard_rounds = [&](unsigned s) { return per_shard + (s < extra ? 1 : 0); };
  if (config.shards == 1) {
    shard_records[0] = run_shard(config, *sampler, config.rounds, 0);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned s = 0; s < config.shards; ++s) {
      workers.emplace_back([&, s] { shard_records[s] = run_shard(config, *sampler, shard_rounds(s), s); });
    }
  }

  ProtocolResult result;
  std::vector<RoundRecord> xy_rounds;
  std::vector<RoundRecord> z_rounds;
  for (auto& shard : shard_records) {
    for (const auto& r : shard) (r.type == RoundType::xy ? xy_rounds : z_rounds).push_back(r);
    if (config.keep_transcript) {
      result.transcript.insert(result.transcript.end(), shard.begin(), shard.end());
    }
    shard.clear();
    shard.shrink_to_fit();
  }

  std::seed_seq seq{config.seed, std::uint64_t{0xa11ce}};
  Rng alice(seq);

  auto& ledger = result.ledger;
  ledger.preshared_key_bits = static_cast<double>(config.rounds) * binary_entropy(config.p_p);
  ledger.second_type_rounds = xy_rounds.size();
  ledger.z_rounds = z_rounds.size();

  result.estimates.x = estimate_qx(xy_rounds);
  ledger.discarded_second_type_rounds = xy_rounds.size() - result.estimates.x.n_plus - result.estimates.x.n_minus;

  // Alice announces a uniformly random subset of the Z rounds
  const auto announce = std::min<std::uint64_t>(announced_size(config, xy_rounds.size()), z_rounds.size());
  std::vector<std::size_t> order(z_rounds.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), alice);
  std::vector<RoundRecord> announced;
  std::vector<RoundRecord> key;
  announced.reserve(announce);
  key.reserve(z_rounds.size() - announce);
  std::vector<bool> is_announced(z_rounds.size());
  for (std::uint64_t i = 0; i < announce; ++i) is_announced[order[i]] = true;
  for (std::size_t i = 0; i < z_rounds.size(); ++i) (is_announced[i] ? announced : key).push_back(z_rounds[i]);
  ledger.announced_z_rounds = announced.size();
  ledger.key_rounds = key.size();
  result.estimates.z = estimate_qz(announced);

  const double q_z = result.estimates.z.q_z;
  double q_x = result.estimates.x.q_x;
  const double lo = 0.5 * q_z;
  const double hi = 1.0 - 0.5 * q_z;
  if (q_x < lo || q_x > hi) {
    q_x = std::clamp(q_x, lo, hi);
    result.estimates.qx_projected = true;
  }
  RateInput in;
  in.n_parties = config.n_parties;
  in.q_z = q_z;
  in.q_x = q_x;
  in.q_ab = result.estimates.z.q_ab;
  in.t_rep = 1.0;
  result.rate = secret_fraction(in);

  const double key_rounds = static_cast<double>(key.size());
  const double worst_qab = *std::max_element(in.q_ab.begin(), in.q_ab.end());
  ledger.error_correction_bits = key_rounds * binary_entropy(worst_qab);
  result.key_length_estimate = key_rounds * result.rate.r_inf;
  result.key_length = key_rounds * result.rate.r_clamped;

  // X^{(x)N} depolarization on the key rounds; the corrected string equals
  // Alice's flipped bits under Shannon-limit error correction
  const auto flipped = classical_depolarize(key, alice);
  if (config.privacy_amplification && result.key_length >= 1.0) {
    std::vector<std::uint8_t> alice_bits(flipped.records.size());
    for (std::size_t i = 0; i < alice_bits.size(); ++i) alice_bits[i] = flipped.records[i].minus_mask & 1U;
    result.final_key = toeplitz_hash(alice_bits, static_cast<std::size_t>(std::floor(result.key_length)),
                                     config.seed ^ 0x70e9117ULL);
  }
  return result;
}

std::vector<std::uint8_t> toeplitz_hash(std::span<const std::uint8_t> input, std::size_t output_bits,
                                        std::uint64_t seed) {
  const std::size_t n = input.size();
  if (output_bits > n) throw InvalidArgument("hash output longer than its input");
  if (output_bits == 0) return {};
  // The matrix T[i][k] = r[i - k + n - 1] is fixed by n + m - 1 random bits.
  // Row i is the window of the reversed string u starting at m - 1 - i.
  const std::size_t m = output_bits;
  const std::size_t diag = n + m - 1;
  Rng rng(seed);
  std::vector<std::uint64_t> u((diag + 63) / 64);
  for (auto& w : u) w = rng();
  if (diag % 64) u.back() &= (std::uint64_t{1} << (diag % 64)) - 1;
  const auto packed = pack_bits(input, (n + 63) / 64);
  std::vector<std::uint8_t> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t start = m - 1 - i;
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < packed.size(); ++w) acc ^= window64(u, start + 64 * w) & packed[w];
    out[i] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return out;
}

}  // namespace nqkd
