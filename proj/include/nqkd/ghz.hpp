#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "nqkd/dense_state.hpp"

namespace nqkd {

enum class Sign { plus, minus };

inline int sign_value(Sign s) { return s == Sign::plus ? 1 : -1; }
inline Sign flipped(Sign s) { return s == Sign::plus ? Sign::minus : Sign::plus; }

/// Index (j, sigma) of the GHZ basis vector (|0>|j> + sigma |1>|~j>)/sqrt2.
///
/// j is an (N-1)-bit string over the Bobs. Its most significant bit belongs to
/// B_1 and its least significant bit to B_{N-1}, so bit k (1-based, counted
/// from the left) is the bit of Bob k.
struct GhzBasisIndex {
  std::uint64_t j = 0;
  Sign sigma = Sign::plus;

  /// Bit of Bob k (1 <= k <= N-1).
  static int bit(std::uint64_t j, int k, int n_parties) {
    return static_cast<int>((j >> (n_parties - 1 - k)) & 1U);
  }
  static std::uint64_t negation(std::uint64_t j, int n_parties) {
    return ~j & ((std::uint64_t{1} << (n_parties - 1)) - 1);
  }
};

/// GHZ-diagonal N-qubit state sum_{j,sigma} lambda_j^sigma |psi_j^sigma><psi_j^sigma|.
class GhzDiagonalState {
 public:
  static constexpr double kTolerance = 1e-12;
  /// Analytic (non-dense) states are stored with 2^(N-1) coefficients per sign.
  static constexpr int kMaxParties = 30;

  /// Validates non-negativity and normalization (within kTolerance).
  GhzDiagonalState(int n_parties, std::vector<double> lambda_plus, std::vector<double> lambda_minus);

  static GhzDiagonalState pure_ghz(int n_parties);
  static GhzDiagonalState maximally_mixed(int n_parties);

  int n_parties() const { return n_; }
  std::uint64_t n_strings() const { return lambda_plus_.size(); }
  double lambda(std::uint64_t j, Sign s) const { return s == Sign::plus ? lambda_plus_[j] : lambda_minus_[j]; }
  const std::vector<double>& lambda_plus() const { return lambda_plus_; }
  const std::vector<double>& lambda_minus() const { return lambda_minus_; }

  /// lambda_j^+ == lambda_j^- for every j > 0 (within tol).
  bool is_depolarized(double tol = kTolerance) const;
  /// Applies the R_k averaging analytically: for j > 0 both signs become their mean.
  GhzDiagonalState symmetrized() const;

  /// Dense embedding (requires N <= dense cap).
  DenseState to_dense() const;

  nlohmann::json to_json() const;
  static GhzDiagonalState from_json(const nlohmann::json& j);

  friend bool operator==(const GhzDiagonalState&, const GhzDiagonalState&) = default;

 private:
  int n_;
  std::vector<double> lambda_plus_;
  std::vector<double> lambda_minus_;
};

/// Computational basis index of |0>|j>; the partner |1>|~j> is ghz_partner_index.
inline std::uint64_t ghz_zero_index(std::uint64_t j) { return j; }
inline std::uint64_t ghz_partner_index(std::uint64_t j, int n_parties) {
  return (std::uint64_t{1} << (n_parties - 1)) | GhzBasisIndex::negation(j, n_parties);
}

DenseState ghz_basis_vector(int n_parties, GhzBasisIndex idx);

/// Members of the extended depolarization set.
struct TwirlOperator {
  enum class Kind { x_all, zz, phase };
  Kind kind = Kind::x_all;
  int bob = 0;  // 1..N-1 for zz (Z_A Z_Bk) and phase (R_k)

  static TwirlOperator x_all() { return {Kind::x_all, 0}; }
  static TwirlOperator zz(int k) { return {Kind::zz, k}; }
  static TwirlOperator phase(int k) { return {Kind::phase, k}; }

  MonomialOperator unitary(int n_parties) const;
};

/// All 2N-1 operators in the order they are applied by the full twirl.
std::vector<TwirlOperator> twirl_operators(int n_parties);

/// U rho U^dagger for one twirl operator.
DenseState apply_twirl_operator(const DenseState& rho, TwirlOperator op);

/// Exact twirl: rho -> (rho + U rho U^dagger)/2 for each operator in turn.
DenseState twirl(const DenseState& rho);

/// Projections <psi_j^sigma|rho|psi_j^sigma> without twirling.
GhzDiagonalState ghz_projections(const DenseState& rho);

/// Twirls rho and returns its GHZ-diagonal coefficients.
GhzDiagonalState ghz_diagonal_from_dense(const DenseState& rho);

double qber_z(const GhzDiagonalState& state);
double qber_x(const GhzDiagonalState& state);
/// <X^{(x)N}> = sum_j (lambda_j^+ - lambda_j^-).
double x_parity_expectation(const GhzDiagonalState& state);
/// Q_{AB_i}; requires lambda_j^+ == lambda_j^- for j > 0.
double qber_pairwise(const GhzDiagonalState& state, int bob);

enum class PauliAxis { x, y, z };

/// <sigma_i^alpha (x) sigma_j^beta> on a pure state of the form a|0...0> + b|1...1>.
double pairwise_correlator(const DenseState& psi, PauliAxis alpha, PauliAxis beta, int party_i, int party_j);

/// Correlator <(m_i . sigma)(m_j . sigma)> for unit measurement directions.
double directional_correlator(const DenseState& psi, const std::array<double, 3>& m_i,
                              const std::array<double, 3>& m_j, int party_i, int party_j);

/// Dense-oracle probabilities for the QBER definitions (used to cross-check
/// the analytic extraction): any Bob differs from Alice in Z, Bob i differs.
double dense_qber_z(const DenseState& rho);
double dense_qber_pairwise(const DenseState& rho, int bob);

}  // namespace nqkd
