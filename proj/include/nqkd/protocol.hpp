#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nqkd/dense_state.hpp"
#include "nqkd/ghz.hpp"
#include "nqkd/keyrate.hpp"

namespace nqkd {

using Rng = std::mt19937_64;

enum class RoundType { z, xy };
enum class MeasurementBasis { x, y, z };

/// Largest party count the round records can hold (bit-packed per round).
inline constexpr int kMaxProtocolParties = 63;

/// One protocol round. Bases and outcomes are bit-packed with party 0
/// (Alice) in bit 0: `y_mask` marks parties measuring Y in XY rounds and
/// `minus_mask` marks parties that obtained the -1 outcome.
struct RoundRecord {
  RoundType type = RoundType::z;
  int n_parties = 0;
  std::uint64_t y_mask = 0;
  std::uint64_t minus_mask = 0;

  MeasurementBasis basis(int party) const;
  int outcome(int party) const { return (minus_mask >> party) & 1U ? -1 : 1; }
  /// Number of parties measuring in Y (0 for Z rounds).
  int kappa_tilde() const;
  /// XY rounds are kept when an even number of parties measured Y.
  bool kept() const { return type == RoundType::z || kappa_tilde() % 2 == 0; }
  /// Product of all outcomes.
  int parity() const;

  nlohmann::json to_json() const;
  static RoundRecord from_json(const nlohmann::json& j);

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// Sign applied to the outcome product of a second-type round: 0 for odd
/// kappa_tilde, +1 when kappa_tilde is a multiple of 4, -1 otherwise.
int f_sign(int kappa_tilde);

/// Draws measurement outcomes for a fixed state.
class RoundSampler {
 public:
  virtual ~RoundSampler() = default;
  virtual int n_parties() const = 0;
  virtual RoundRecord sample_z(Rng& rng) const = 0;
  /// Samples outcomes for the given Y pattern (bit p set: party p measures Y).
  virtual RoundRecord sample_xy(std::uint64_t y_mask, Rng& rng) const = 0;
  /// Exact probability distribution over outcome strings (bit p set: party p
  /// got -1) for the given basis pattern. Only for small registers.
  virtual std::vector<double> xy_distribution(std::uint64_t y_mask) const = 0;
};

/// Born-rule sampling from a dense register (N <= dense cap).
std::unique_ptr<RoundSampler> make_dense_sampler(const DenseState& state);

/// Sampling from a GHZ-diagonal state without building the dense matrix: a
/// basis component (j, sigma) is drawn with probability lambda_j^sigma, then
/// the product basis outcome of that pure component. For a component with
/// kappa_tilde Y measurements and m Y-measuring Bobs with j-bit 1 the outcome
/// product has mean sigma f(kappa_tilde) (-1)^m, individual outcomes uniform
/// given the product.
std::unique_ptr<RoundSampler> make_ghz_sampler(const GhzDiagonalState& state);

/// Dense sampler when N <= dense cap, analytic GHZ sampler otherwise.
std::unique_ptr<RoundSampler> make_sampler(const GhzDiagonalState& state);

/// One round of the requested type. XY rounds draw each party's basis
/// independently with probability 1/2.
RoundRecord sample_round(const RoundSampler& sampler, RoundType type, Rng& rng);

/// Second-type round with Alice following M_A(kappa): she measures X when an
/// even number of Bobs chose Y and Y otherwise, so kappa_tilde is always even.
RoundRecord sample_round_alice_rule(const RoundSampler& sampler, Rng& rng);

struct QxEstimate {
  double q_x = 0.0;
  double x_parity = 0.0;  // estimated <X^{(x)N}>
  std::uint64_t n_plus = 0;
  std::uint64_t n_minus = 0;
};

/// Estimates Q_X from second-type rounds; odd-kappa_tilde rounds are skipped.
/// Throws InvalidArgument when no kept rounds remain.
QxEstimate estimate_qx(std::span<const RoundRecord> records);

struct QzEstimate {
  double q_z = 0.0;
  std::vector<double> q_ab;
  std::uint64_t rounds = 0;
};

/// Estimates Q_Z and each Q_{AB_i} from announced Z rounds.
QzEstimate estimate_qz(std::span<const RoundRecord> records);

struct FlipResult {
  std::vector<RoundRecord> records;
  std::vector<bool> flipped;  // announced flip per round
};

/// Flips every party's Z outcome in a uniformly random subset of rounds.
FlipResult classical_depolarize(std::span<const RoundRecord> z_records, Rng& rng);

enum class BasisRule { independent, alice_rule };

/// Announced Z-round subset size: equal to the number of second-type rounds,
/// L h(p_p), or an explicit count.
struct AnnouncedZ {
  enum class Mode { match_second_type, preshared_length, fixed };
  Mode mode = Mode::match_second_type;
  std::uint64_t count = 0;
};

/// How the state shared each round is specified.
struct StateSource {
  std::variant<GhzDiagonalState, DenseState> state;

  int n_parties() const;
  std::unique_ptr<RoundSampler> sampler() const;
};

struct ProtocolConfig {
  int n_parties = 3;
  std::uint64_t rounds = 10000;
  double p_p = 0.05;
  StateSource source{GhzDiagonalState::pure_ghz(3)};
  std::uint64_t seed = 0;
  AnnouncedZ announced;
  BasisRule basis_rule = BasisRule::independent;
  unsigned shards = 1;
  bool privacy_amplification = false;
  bool keep_transcript = true;

  /// Throws InvalidArgument on violated invariants (0 < p_p < 1, L >= 1,
  /// source size matches n_parties, shards >= 1).
  void validate() const;

  /// Config file schema: {"n", "rounds", "p_p", "seed", "state": {...},
  /// "announced_z": "match"|"preshared"|int, "basis_rule", "shards",
  /// "privacy_amplification", "transcript"}. The state is one of
  /// {"kind":"depolarized","qber"}, {"kind":"ghz_diagonal", "lambda_plus",
  /// "lambda_minus"}, {"kind":"gate","fG","topology"} (twirled prep circuit)
  /// or {"kind":"channel","fC"}.
  static ProtocolConfig from_json(const nlohmann::json& j);
};

struct AccountingLedger {
  double preshared_key_bits = 0.0;  // L h(p_p)
  std::uint64_t second_type_rounds = 0;
  std::uint64_t discarded_second_type_rounds = 0;
  std::uint64_t z_rounds = 0;
  std::uint64_t announced_z_rounds = 0;
  std::uint64_t key_rounds = 0;
  double error_correction_bits = 0.0;

  nlohmann::json to_json() const;
};

/// Expected ledger for a configuration before running it (second-type count
/// L p_p, announced subset per the config's rule).
AccountingLedger presharedkey_and_announcement_accounting(const ProtocolConfig& config);

struct EstimationResult {
  QzEstimate z;
  QxEstimate x;
  /// True when Q_X had to be moved into [Q_Z/2, 1 - Q_Z/2] before the rate.
  bool qx_projected = false;

  nlohmann::json to_json() const;
};

struct ProtocolResult {
  EstimationResult estimates;
  RateReport rate;
  /// key rounds x r_inf (may be negative) and its clamped version.
  double key_length_estimate = 0.0;
  double key_length = 0.0;
  AccountingLedger ledger;
  std::vector<RoundRecord> transcript;
  /// Output of Toeplitz hashing of Alice's key, when enabled.
  std::vector<std::uint8_t> final_key;

  nlohmann::json summary_json() const;
};

/// Runs the full protocol: round marking, sampling, parameter estimation,
/// classical X^{(x)N} depolarization, Shannon-limit error correction and
/// privacy amplification accounting.
ProtocolResult run_protocol(const ProtocolConfig& config);

/// Seeded Toeplitz two-universal hash of `input` to `output_bits` bits.
std::vector<std::uint8_t> toeplitz_hash(std::span<const std::uint8_t> input, std::size_t output_bits,
                                        std::uint64_t seed);

}  // namespace nqkd
