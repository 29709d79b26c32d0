#include "nqkd/ghz.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nqkd/error.hpp"

namespace nqkd {
namespace {

void require_parties(int n) {
  if (n < 2) throw InvalidArgument("GHZ states need at least two parties");
  if (n > GhzDiagonalState::kMaxParties) {
    throw InvalidArgument("GHZ-diagonal state of " + std::to_string(n) + " parties exceeds storage cap");
  }
}

void require_bob(int bob, int n) {
  if (bob < 1 || bob > n - 1) throw InvalidArgument("Bob index " + std::to_string(bob) + " out of range");
}

MonomialOperator pauli(PauliAxis axis, int qubit, int n) {
  switch (axis) {
    case PauliAxis::x:
      return pauli_x(qubit, n);
    case PauliAxis::y:
      return pauli_y(qubit, n);
    case PauliAxis::z:
      break;
  }
  return pauli_z(qubit, n);
}

void require_correlated_form(const DenseState& psi) {
  const int n = psi.n_qubits();
  if (n < 3) throw InvalidArgument("correlator theorem applies to N >= 3");
  const auto& amps = psi.amplitudes();
  const auto last = amps.size() - 1;
  for (std::size_t x = 1; x < last; ++x) {
    if (std::abs(amps[x]) > 1e-12) throw InvalidArgument("state is not of the form a|0...0> + b|1...1>");
  }
  psi.validate();
}

}  // namespace

GhzDiagonalState::GhzDiagonalState(int n_parties, std::vector<double> lambda_plus,
                                   std::vector<double> lambda_minus)
    : n_(n_parties), lambda_plus_(std::move(lambda_plus)), lambda_minus_(std::move(lambda_minus)) {
  require_parties(n_);
  const auto count = std::uint64_t{1} << (n_ - 1);
  if (lambda_plus_.size() != count || lambda_minus_.size() != count) {
    throw InvalidArgument("GHZ-diagonal coefficient arrays must have length 2^(N-1)");
  }
  double sum = 0.0;
  for (std::uint64_t j = 0; j < count; ++j) {
    if (!(lambda_plus_[j] >= -kTolerance) || !(lambda_minus_[j] >= -kTolerance)) {
      throw InvalidArgument("GHZ-diagonal coefficient is negative");
    }
    sum += lambda_plus_[j] + lambda_minus_[j];
  }
  // accumulated rounding grows with the number of coefficients
  const double tol = kTolerance * std::max(1.0, std::sqrt(static_cast<double>(count)));
  if (std::abs(sum - 1.0) > tol) throw InvalidArgument("GHZ-diagonal coefficients do not sum to 1");
}

GhzDiagonalState GhzDiagonalState::pure_ghz(int n_parties) {
  require_parties(n_parties);
  const auto count = std::uint64_t{1} << (n_parties - 1);
  std::vector<double> plus(count), minus(count);
  plus[0] = 1.0;
  return {n_parties, std::move(plus), std::move(minus)};
}

GhzDiagonalState GhzDiagonalState::maximally_mixed(int n_parties) {
  require_parties(n_parties);
  const auto count = std::uint64_t{1} << (n_parties - 1);
  const double w = std::ldexp(1.0, -n_parties);
  return {n_parties, std::vector<double>(count, w), std::vector<double>(count, w)};
}

bool GhzDiagonalState::is_depolarized(double tol) const {
  for (std::uint64_t j = 1; j < n_strings(); ++j) {
    if (std::abs(lambda_plus_[j] - lambda_minus_[j]) > tol) return false;
  }
  return true;
}

GhzDiagonalState GhzDiagonalState::symmetrized() const {
  auto plus = lambda_plus_;
  auto minus = lambda_minus_;
  for (std::uint64_t j = 1; j < n_strings(); ++j) {
    const double mean = 0.5 * (plus[j] + minus[j]);
    plus[j] = mean;
    minus[j] = mean;
  }
  return {n_, std::move(plus), std::move(minus)};
}

DenseState GhzDiagonalState::to_dense() const {
  require_dense_cap(n_);
  const auto d = std::uint64_t{1} << n_;
  std::vector<Complex> m(d * d);
  for (std::uint64_t j = 0; j < n_strings(); ++j) {
    const auto a = ghz_zero_index(j);
    const auto b = ghz_partner_index(j, n_);
    const double sum = 0.5 * (lambda_plus_[j] + lambda_minus_[j]);
    const double diff = 0.5 * (lambda_plus_[j] - lambda_minus_[j]);
    m[a * d + a] += sum;
    m[b * d + b] += sum;
    m[a * d + b] += diff;
    m[b * d + a] += diff;
  }
  return DenseState::from_matrix(n_, std::move(m));
}

nlohmann::json GhzDiagonalState::to_json() const {
  return {{"n", n_}, {"lambda_plus", lambda_plus_}, {"lambda_minus", lambda_minus_}};
}

GhzDiagonalState GhzDiagonalState::from_json(const nlohmann::json& j) {
  try {
    return {j.at("n").get<int>(), j.at("lambda_plus").get<std::vector<double>>(),
            j.at("lambda_minus").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed GHZ-diagonal state: ") + e.what());
  }
}

DenseState ghz_basis_vector(int n_parties, GhzBasisIndex idx) {
  require_parties(n_parties);
  require_dense_cap(n_parties);
  if (idx.j >= (std::uint64_t{1} << (n_parties - 1))) throw InvalidArgument("GHZ basis index j out of range");
  std::vector<Complex> amps(std::uint64_t{1} << n_parties);
  const double s = 1.0 / std::numbers::sqrt2;
  amps[ghz_zero_index(idx.j)] = s;
  amps[ghz_partner_index(idx.j, n_parties)] = s * sign_value(idx.sigma);
  return DenseState::from_amplitudes(n_parties, std::move(amps));
}

MonomialOperator TwirlOperator::unitary(int n) const {
  switch (kind) {
    case Kind::x_all: {
      auto op = pauli_x(0, n);
      for (int q = 1; q < n; ++q) op = op.then(pauli_x(q, n));
      return op;
    }
    case Kind::zz:
      require_bob(bob, n);
      return pauli_z(0, n).then(pauli_z(bob, n));
    case Kind::phase:
      require_bob(bob, n);
      return phase_diag(0, n, Complex{0.0, 1.0}).then(phase_diag(bob, n, Complex{0.0, -1.0}));
  }
  throw InvalidArgument("unknown twirl operator");
}

std::vector<TwirlOperator> twirl_operators(int n_parties) {
  std::vector<TwirlOperator> ops{TwirlOperator::x_all()};
  for (int k = 1; k < n_parties; ++k) ops.push_back(TwirlOperator::zz(k));
  for (int k = 1; k < n_parties; ++k) ops.push_back(TwirlOperator::phase(k));
  return ops;
}

DenseState apply_twirl_operator(const DenseState& rho, TwirlOperator op) {
  return rho.conjugated(op.unitary(rho.n_qubits()));
}

DenseState twirl(const DenseState& rho) {
  rho.validate();
  require_parties(rho.n_qubits());
  auto state = rho.to_mixed();
  for (const auto& op : twirl_operators(rho.n_qubits())) {
    state = state.mixed_with(apply_twirl_operator(state, op), 0.5);
  }
  return state;
}

GhzDiagonalState ghz_projections(const DenseState& rho) {
  const int n = rho.n_qubits();
  require_parties(n);
  const auto count = std::uint64_t{1} << (n - 1);
  std::vector<double> plus(count), minus(count);
  for (std::uint64_t j = 0; j < count; ++j) {
    const auto a = ghz_zero_index(j);
    const auto b = ghz_partner_index(j, n);
    const double diag = 0.5 * (rho.element(a, a).real() + rho.element(b, b).real());
    const double coh = 0.5 * (rho.element(a, b).real() + rho.element(b, a).real());
    plus[j] = diag + coh;
    minus[j] = diag - coh;
  }
  return {n, std::move(plus), std::move(minus)};
}

GhzDiagonalState ghz_diagonal_from_dense(const DenseState& rho) { return ghz_projections(twirl(rho)); }

double qber_z(const GhzDiagonalState& state) {
  return 1.0 - state.lambda(0, Sign::plus) - state.lambda(0, Sign::minus);
}

double x_parity_expectation(const GhzDiagonalState& state) {
  double acc = 0.0;
  for (std::uint64_t j = 0; j < state.n_strings(); ++j) acc += state.lambda(j, Sign::plus) - state.lambda(j, Sign::minus);
  return acc;
}

double qber_x(const GhzDiagonalState& state) { return 0.5 * (1.0 - x_parity_expectation(state)); }

double qber_pairwise(const GhzDiagonalState& state, int bob) {
  const int n = state.n_parties();
  require_bob(bob, n);
  if (!state.is_depolarized()) throw InvalidArgument("Q_AB requires lambda_j^+ == lambda_j^- for j > 0");
  double acc = 0.0;
  for (std::uint64_t j = 0; j < state.n_strings(); ++j) {
    if (GhzBasisIndex::bit(j, bob, n)) acc += state.lambda(j, Sign::plus) + state.lambda(j, Sign::minus);
  }
  return acc;
}

double pairwise_correlator(const DenseState& psi, PauliAxis alpha, PauliAxis beta, int party_i, int party_j) {
  require_correlated_form(psi);
  const int n = psi.n_qubits();
  if (party_i == party_j || party_i < 0 || party_j < 0 || party_i >= n || party_j >= n) {
    throw InvalidArgument("correlator needs two distinct parties");
  }
  return psi.expectation(pauli(alpha, party_i, n).then(pauli(beta, party_j, n)));
}

double directional_correlator(const DenseState& psi, const std::array<double, 3>& m_i,
                              const std::array<double, 3>& m_j, int party_i, int party_j) {
  constexpr std::array axes{PauliAxis::x, PauliAxis::y, PauliAxis::z};
  double acc = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (m_i[a] == 0.0 || m_j[b] == 0.0) continue;
      acc += m_i[a] * m_j[b] * pairwise_correlator(psi, axes[a], axes[b], party_i, party_j);
    }
  }
  return acc;
}

double dense_qber_z(const DenseState& rho) {
  const int n = rho.n_qubits();
  const auto p = rho.z_probabilities();
  const auto all_ones = (std::uint64_t{1} << n) - 1;
  // agreement means the string is 0...0 or 1...1
  return 1.0 - p[0] - p[all_ones];
}

double dense_qber_pairwise(const DenseState& rho, int bob) {
  const int n = rho.n_qubits();
  require_bob(bob, n);
  const auto p = rho.z_probabilities();
  double acc = 0.0;
  for (std::uint64_t x = 0; x < p.size(); ++x) {
    if (basis_bit(x, 0, n) != basis_bit(x, bob, n)) acc += p[x];
  }
  return acc;
}

}  // namespace nqkd
