#include "nqkd/dense_state.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include "nqkd/error.hpp"

namespace nqkd {
namespace {

constexpr int kDefaultDenseCap = 12;
constexpr int kHardDenseCap = 15;

std::uint64_t dim_of(int n) { return std::uint64_t{1} << n; }

// Inserts the bits of `sub` (over `positions`, qubit order) into a full index.
std::uint64_t scatter_bits(std::uint64_t sub, std::span<const int> positions, int n_qubits) {
  std::uint64_t full = 0;
  const int k = static_cast<int>(positions.size());
  for (int i = 0; i < k; ++i) {
    if ((sub >> (k - 1 - i)) & 1U) full |= qubit_mask(positions[i], n_qubits);
  }
  return full;
}

}  // namespace

int dense_qubit_cap() {
  if (const char* env = std::getenv("NQKD_DENSE_CAP")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value >= 1 && value <= kHardDenseCap) return static_cast<int>(value);
  }
  return kDefaultDenseCap;
}

void require_dense_cap(int n_qubits) {
  if (n_qubits < 1) throw InvalidArgument("dense register needs at least one qubit");
  if (n_qubits > dense_qubit_cap()) {
    throw InvalidArgument("dense register of " + std::to_string(n_qubits) + " qubits exceeds cap " +
                          std::to_string(dense_qubit_cap()));
  }
}

MonomialOperator MonomialOperator::identity(int n_qubits) {
  MonomialOperator op;
  op.target.resize(dim_of(n_qubits));
  op.phase.assign(dim_of(n_qubits), Complex{1.0, 0.0});
  for (std::uint64_t x = 0; x < op.target.size(); ++x) op.target[x] = x;
  return op;
}

MonomialOperator MonomialOperator::then(const MonomialOperator& next) const {
  MonomialOperator out;
  out.target.resize(target.size());
  out.phase.resize(target.size());
  for (std::uint64_t x = 0; x < target.size(); ++x) {
    out.target[x] = next.target[target[x]];
    out.phase[x] = next.phase[target[x]] * phase[x];
  }
  return out;
}

MonomialOperator pauli_x(int qubit, int n_qubits) {
  auto op = MonomialOperator::identity(n_qubits);
  const auto m = qubit_mask(qubit, n_qubits);
  for (auto& t : op.target) t ^= m;
  return op;
}

MonomialOperator pauli_z(int qubit, int n_qubits) {
  return phase_diag(qubit, n_qubits, Complex{-1.0, 0.0});
}

MonomialOperator pauli_y(int qubit, int n_qubits) {
  // Y|0> = i|1>, Y|1> = -i|0>
  auto op = pauli_x(qubit, n_qubits);
  for (std::uint64_t x = 0; x < op.target.size(); ++x) {
    op.phase[x] = basis_bit(x, qubit, n_qubits) ? Complex{0.0, -1.0} : Complex{0.0, 1.0};
  }
  return op;
}

MonomialOperator phase_diag(int qubit, int n_qubits, Complex phase_of_one) {
  auto op = MonomialOperator::identity(n_qubits);
  for (std::uint64_t x = 0; x < op.target.size(); ++x) {
    if (basis_bit(x, qubit, n_qubits)) op.phase[x] = phase_of_one;
  }
  return op;
}

MonomialOperator cnot(int control, int target, int n_qubits) {
  auto op = MonomialOperator::identity(n_qubits);
  const auto m = qubit_mask(target, n_qubits);
  for (std::uint64_t x = 0; x < op.target.size(); ++x) {
    if (basis_bit(x, control, n_qubits)) op.target[x] = x ^ m;
  }
  return op;
}

MonomialOperator cz(int a, int b, int n_qubits) {
  auto op = MonomialOperator::identity(n_qubits);
  for (std::uint64_t x = 0; x < op.target.size(); ++x) {
    if (basis_bit(x, a, n_qubits) && basis_bit(x, b, n_qubits)) op.phase[x] = -1.0;
  }
  return op;
}

namespace gates {
Matrix2 hadamard() {
  const double s = 1.0 / std::numbers::sqrt2;
  return {Complex{s}, Complex{s}, Complex{s}, Complex{-s}};
}
Matrix2 pauli_x() { return {Complex{0}, Complex{1}, Complex{1}, Complex{0}}; }
Matrix2 pauli_y() { return {Complex{0}, Complex{0, -1}, Complex{0, 1}, Complex{0}}; }
Matrix2 pauli_z() { return {Complex{1}, Complex{0}, Complex{0}, Complex{-1}}; }
Matrix2 y_to_z() {
  // H * diag(1, -i): maps (|0> + i|1>)/sqrt2 to |0> and (|0> - i|1>)/sqrt2 to |1>.
  const double s = 1.0 / std::numbers::sqrt2;
  return {Complex{s}, Complex{0, -s}, Complex{s}, Complex{0, s}};
}
}  // namespace gates

DenseState::DenseState(int n_qubits, bool pure, std::vector<Complex> data)
    : n_qubits_(n_qubits), pure_(pure), data_(std::move(data)) {}

DenseState DenseState::from_amplitudes(int n_qubits, std::vector<Complex> amplitudes) {
  require_dense_cap(n_qubits);
  if (amplitudes.size() != dim_of(n_qubits)) throw InvalidArgument("amplitude vector has wrong length");
  return DenseState(n_qubits, true, std::move(amplitudes));
}

DenseState DenseState::from_matrix(int n_qubits, std::vector<Complex> matrix) {
  require_dense_cap(n_qubits);
  if (matrix.size() != dim_of(n_qubits) * dim_of(n_qubits)) throw InvalidArgument("density matrix has wrong size");
  return DenseState(n_qubits, false, std::move(matrix));
}

DenseState DenseState::basis_state(int n_qubits, std::uint64_t index) {
  require_dense_cap(n_qubits);
  if (index >= dim_of(n_qubits)) throw InvalidArgument("basis index out of range");
  std::vector<Complex> amps(dim_of(n_qubits));
  amps[index] = 1.0;
  return DenseState(n_qubits, true, std::move(amps));
}

DenseState DenseState::maximally_mixed(int n_qubits) {
  require_dense_cap(n_qubits);
  const auto d = dim_of(n_qubits);
  std::vector<Complex> m(d * d);
  for (std::uint64_t i = 0; i < d; ++i) m[i * d + i] = 1.0 / static_cast<double>(d);
  return DenseState(n_qubits, false, std::move(m));
}

DenseState DenseState::product(std::span<const std::array<Complex, 2>> qubits) {
  const int n = static_cast<int>(qubits.size());
  require_dense_cap(n);
  std::vector<Complex> amps(dim_of(n), Complex{1.0});
  for (std::uint64_t x = 0; x < amps.size(); ++x) {
    for (int q = 0; q < n; ++q) amps[x] *= qubits[q][basis_bit(x, q, n)];
  }
  return DenseState(n, true, std::move(amps));
}

const std::vector<Complex>& DenseState::amplitudes() const {
  if (!pure_) throw InvalidArgument("amplitudes requested from a mixed state");
  return data_;
}

std::vector<Complex> DenseState::density_matrix() const {
  if (!pure_) return data_;
  const auto d = dim();
  std::vector<Complex> m(d * d);
  for (std::uint64_t r = 0; r < d; ++r) {
    for (std::uint64_t c = 0; c < d; ++c) m[r * d + c] = data_[r] * std::conj(data_[c]);
  }
  return m;
}

Complex DenseState::element(std::uint64_t row, std::uint64_t col) const {
  if (pure_) return data_[row] * std::conj(data_[col]);
  return data_[row * dim() + col];
}

DenseState DenseState::to_mixed() const {
  if (!pure_) return *this;
  return DenseState(n_qubits_, false, density_matrix());
}

void DenseState::validate(double tol) const {
  if (pure_) {
    double norm = 0.0;
    for (const auto& a : data_) norm += std::norm(a);
    if (std::abs(norm - 1.0) > tol) throw InvalidArgument("pure state is not normalized");
    return;
  }
  const auto d = dim();
  for (std::uint64_t r = 0; r < d; ++r) {
    for (std::uint64_t c = r; c < d; ++c) {
      if (std::abs(data_[r * d + c] - std::conj(data_[c * d + r])) > tol) {
        throw InvalidArgument("density matrix is not Hermitian");
      }
    }
  }
  if (std::abs(trace() - 1.0) > tol) throw InvalidArgument("density matrix trace differs from 1");
  const auto ev = eigenvalues();
  if (!ev.empty() && ev.front() < -1e-10) throw InvalidArgument("density matrix has a negative eigenvalue");
}

DenseState DenseState::conjugated(const MonomialOperator& op) const {
  const auto d = dim();
  if (op.target.size() != d) throw InvalidArgument("operator dimension mismatch");
  std::vector<Complex> out(data_.size());
  if (pure_) {
    for (std::uint64_t x = 0; x < d; ++x) out[op.target[x]] = op.phase[x] * data_[x];
  } else {
    for (std::uint64_t r = 0; r < d; ++r) {
      const auto tr = op.target[r] * d;
      const auto pr = op.phase[r];
      for (std::uint64_t c = 0; c < d; ++c) {
        out[tr + op.target[c]] = pr * data_[r * d + c] * std::conj(op.phase[c]);
      }
    }
  }
  return DenseState(n_qubits_, pure_, std::move(out));
}

DenseState DenseState::with_gate(const Matrix2& g, int qubit) const {
  const auto d = dim();
  const auto m = qubit_mask(qubit, n_qubits_);
  std::vector<Complex> out = data_;
  if (pure_) {
    for (std::uint64_t x = 0; x < d; ++x) {
      if (x & m) continue;
      const Complex a0 = data_[x], a1 = data_[x | m];
      out[x] = g[0] * a0 + g[1] * a1;
      out[x | m] = g[2] * a0 + g[3] * a1;
    }
    return DenseState(n_qubits_, true, std::move(out));
  }
  // left multiply by G, then right multiply by G^dagger
  std::vector<Complex> tmp = data_;
  for (std::uint64_t r = 0; r < d; ++r) {
    if (r & m) continue;
    for (std::uint64_t c = 0; c < d; ++c) {
      const Complex a0 = data_[r * d + c], a1 = data_[(r | m) * d + c];
      tmp[r * d + c] = g[0] * a0 + g[1] * a1;
      tmp[(r | m) * d + c] = g[2] * a0 + g[3] * a1;
    }
  }
  for (std::uint64_t r = 0; r < d; ++r) {
    for (std::uint64_t c = 0; c < d; ++c) {
      if (c & m) continue;
      const Complex a0 = tmp[r * d + c], a1 = tmp[r * d + (c | m)];
      out[r * d + c] = a0 * std::conj(g[0]) + a1 * std::conj(g[1]);
      out[r * d + (c | m)] = a0 * std::conj(g[2]) + a1 * std::conj(g[3]);
    }
  }
  return DenseState(n_qubits_, false, std::move(out));
}

DenseState DenseState::with_qubits_replaced(std::span<const int> qubits) const {
  const auto d = dim();
  std::uint64_t mask = 0;
  for (int q : qubits) mask |= qubit_mask(q, n_qubits_);
  const int k = static_cast<int>(qubits.size());
  const double norm = 1.0 / static_cast<double>(dim_of(k));
  const auto rho = density_matrix();
  std::vector<Complex> out(d * d);
  for (std::uint64_t r = 0; r < d; ++r) {
    for (std::uint64_t c = 0; c < d; ++c) {
      if ((r & mask) != (c & mask)) continue;
      // sum over the replaced subsystem's diagonal
      Complex acc{0.0};
      for (std::uint64_t s = 0; s < dim_of(k); ++s) {
        const auto bits = scatter_bits(s, qubits, n_qubits_);
        acc += rho[((r & ~mask) | bits) * d + ((c & ~mask) | bits)];
      }
      out[r * d + c] = acc * norm;
    }
  }
  return DenseState(n_qubits_, false, std::move(out));
}

DenseState DenseState::mixed_with(const DenseState& other, double p) const {
  if (other.n_qubits_ != n_qubits_) throw InvalidArgument("mixing states of different size");
  auto a = density_matrix();
  const auto b = other.density_matrix();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (1.0 - p) * a[i] + p * b[i];
  return DenseState(n_qubits_, false, std::move(a));
}

std::vector<double> DenseState::z_probabilities() const {
  const auto d = dim();
  std::vector<double> p(d);
  for (std::uint64_t x = 0; x < d; ++x) p[x] = pure_ ? std::norm(data_[x]) : data_[x * d + x].real();
  return p;
}

double DenseState::trace() const {
  double t = 0.0;
  for (double p : z_probabilities()) t += p;
  return t;
}

double DenseState::fidelity_with(const DenseState& target) const {
  const auto& t = target.amplitudes();
  if (target.n_qubits_ != n_qubits_) throw InvalidArgument("fidelity between states of different size");
  const auto d = dim();
  if (pure_) {
    Complex overlap{0.0};
    for (std::uint64_t x = 0; x < d; ++x) overlap += std::conj(t[x]) * data_[x];
    return std::norm(overlap);
  }
  Complex acc{0.0};
  for (std::uint64_t r = 0; r < d; ++r) {
    for (std::uint64_t c = 0; c < d; ++c) acc += std::conj(t[r]) * data_[r * d + c] * t[c];
  }
  return acc.real();
}

double DenseState::expectation(const MonomialOperator& op) const {
  const auto d = dim();
  Complex acc{0.0};
  // tr(rho U) = sum_x <x|rho U|x> = sum_x phase(x) rho[x, perm(x)]... U|x> = phase(x)|perm(x)>
  for (std::uint64_t x = 0; x < d; ++x) acc += op.phase[x] * element(x, op.target[x]);
  return acc.real();
}

std::pair<double, DenseState> DenseState::measure_and_remove(int qubit, const Matrix2& basis_to_z,
                                                             int outcome) const {
  const auto rotated = with_gate(basis_to_z, qubit);
  const int n_out = n_qubits_ - 1;
  const auto d_out = dim_of(n_out);
  std::vector<int> keep;
  for (int q = 0; q < n_qubits_; ++q) {
    if (q != qubit) keep.push_back(q);
  }
  const auto fixed = outcome ? qubit_mask(qubit, n_qubits_) : 0;
  auto full_index = [&](std::uint64_t sub) { return scatter_bits(sub, keep, n_qubits_) | fixed; };
  if (pure_) {
    std::vector<Complex> amps(d_out);
    double prob = 0.0;
    for (std::uint64_t s = 0; s < d_out; ++s) {
      amps[s] = rotated.data_[full_index(s)];
      prob += std::norm(amps[s]);
    }
    if (prob > 0.0) {
      for (auto& a : amps) a /= std::sqrt(prob);
    }
    return {prob, DenseState(n_out, true, std::move(amps))};
  }
  std::vector<Complex> m(d_out * d_out);
  double prob = 0.0;
  for (std::uint64_t r = 0; r < d_out; ++r) {
    for (std::uint64_t c = 0; c < d_out; ++c) m[r * d_out + c] = rotated.element(full_index(r), full_index(c));
    prob += m[r * d_out + r].real();
  }
  if (prob > 0.0) {
    for (auto& v : m) v /= prob;
  }
  return {prob, DenseState(n_out, false, std::move(m))};
}

DenseState DenseState::traced_out(int qubit) const {
  std::vector<int> keep;
  for (int q = 0; q < n_qubits_; ++q) {
    if (q != qubit) keep.push_back(q);
  }
  return reduced_to(keep);
}

DenseState DenseState::reduced_to(std::span<const int> keep) const {
  std::vector<int> traced;
  for (int q = 0; q < n_qubits_; ++q) {
    if (std::find(keep.begin(), keep.end(), q) == keep.end()) traced.push_back(q);
  }
  const int k = static_cast<int>(keep.size());
  const auto d_keep = dim_of(k);
  const auto d_tr = dim_of(static_cast<int>(traced.size()));
  std::vector<Complex> out(d_keep * d_keep);
  for (std::uint64_t r = 0; r < d_keep; ++r) {
    const auto rk = scatter_bits(r, keep, n_qubits_);
    for (std::uint64_t c = 0; c < d_keep; ++c) {
      const auto ck = scatter_bits(c, keep, n_qubits_);
      Complex acc{0.0};
      for (std::uint64_t e = 0; e < d_tr; ++e) {
        const auto eb = scatter_bits(e, traced, n_qubits_);
        acc += element(rk | eb, ck | eb);
      }
      out[r * d_keep + c] = acc;
    }
  }
  return DenseState(k, false, std::move(out));
}

std::vector<double> DenseState::eigenvalues() const {
  const auto d = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXcd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = element(r, c);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double DenseState::entropy() const {
  double s = 0.0;
  for (double p : eigenvalues()) {
    if (p > 1e-15) s -= p * std::log2(p);
  }
  return s;
}

}  // namespace nqkd
