#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace nqkd {

using Complex = std::complex<double>;
using Matrix2 = std::array<Complex, 4>;  // row-major 2x2

/// Largest register the dense oracles will build. Defaults to 12 qubits and
/// can be overridden with the NQKD_DENSE_CAP environment variable.
int dense_qubit_cap();

/// Throws InvalidArgument when n_qubits exceeds dense_qubit_cap().
void require_dense_cap(int n_qubits);

/// Index of computational basis state bits: qubit 0 is the most significant
/// bit of a basis index, so for the N parties (A, B_1, ..., B_{N-1}) Alice is
/// qubit 0 and Bob k is qubit k.
inline int basis_bit(std::uint64_t index, int qubit, int n_qubits) {
  return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1U);
}

inline std::uint64_t qubit_mask(int qubit, int n_qubits) {
  return std::uint64_t{1} << (n_qubits - 1 - qubit);
}

/// An operator of the form U|x> = phase(x)|perm(x)>. Every twirl operator and
/// the CNOT/CZ gates are of this form, which allows O(4^N) conjugation.
struct MonomialOperator {
  std::vector<std::uint64_t> target;  // perm(x)
  std::vector<Complex> phase;         // phase(x)

  static MonomialOperator identity(int n_qubits);
  MonomialOperator then(const MonomialOperator& next) const;
};

MonomialOperator pauli_x(int qubit, int n_qubits);
MonomialOperator pauli_y(int qubit, int n_qubits);
MonomialOperator pauli_z(int qubit, int n_qubits);
MonomialOperator phase_diag(int qubit, int n_qubits, Complex phase_of_one);
MonomialOperator cnot(int control, int target, int n_qubits);
MonomialOperator cz(int a, int b, int n_qubits);

namespace gates {
Matrix2 hadamard();
Matrix2 pauli_x();
Matrix2 pauli_y();
Matrix2 pauli_z();
/// Rotates the Y eigenbasis onto the Z eigenbasis (H * S^dagger).
Matrix2 y_to_z();
}  // namespace gates

/// Pure (state vector) or mixed (density matrix) register of n qubits.
class DenseState {
 public:
  static DenseState from_amplitudes(int n_qubits, std::vector<Complex> amplitudes);
  static DenseState from_matrix(int n_qubits, std::vector<Complex> matrix);
  static DenseState basis_state(int n_qubits, std::uint64_t index);
  static DenseState maximally_mixed(int n_qubits);
  /// Tensor product of single-qubit pure states, qubit 0 first.
  static DenseState product(std::span<const std::array<Complex, 2>> qubits);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return std::size_t{1} << n_qubits_; }
  bool is_pure() const { return pure_; }

  /// Amplitudes of a pure state; throws for mixed states.
  const std::vector<Complex>& amplitudes() const;
  /// Row-major density matrix (built on demand for pure states).
  std::vector<Complex> density_matrix() const;
  Complex element(std::uint64_t row, std::uint64_t col) const;

  DenseState to_mixed() const;

  /// Checks the physical-state invariants: unit norm for pure states;
  /// Hermitian, unit trace and eigenvalues >= -1e-10 for mixed states.
  /// Throws InvalidArgument with the first violation found.
  void validate(double tol = 1e-12) const;

  DenseState conjugated(const MonomialOperator& op) const;
  DenseState with_gate(const Matrix2& gate, int qubit) const;
  /// Replaces the given qubits by the maximally mixed state:
  /// rho -> tr_S(rho) (x) 1/2^|S|. Always returns a mixed state.
  DenseState with_qubits_replaced(std::span<const int> qubits) const;
  /// Convex combination (1-p)*this + p*other; both converted to mixed.
  DenseState mixed_with(const DenseState& other, double p) const;

  /// Probabilities of computational basis outcomes (diagonal of rho).
  std::vector<double> z_probabilities() const;
  double trace() const;
  /// <target|rho|target> for a pure target.
  double fidelity_with(const DenseState& pure_target) const;
  /// Expectation value of a monomial observable (must be Hermitian).
  double expectation(const MonomialOperator& op) const;

  /// Post-selects qubit onto the eigenvector of `basis_to_z`'s preimage of
  /// |outcome>, returning the outcome probability and the normalized
  /// post-measurement state on the remaining qubits.
  std::pair<double, DenseState> measure_and_remove(int qubit, const Matrix2& basis_to_z, int outcome) const;
  /// Traces out one qubit.
  DenseState traced_out(int qubit) const;
  /// Reduced state on the listed qubits (in the listed order).
  DenseState reduced_to(std::span<const int> keep) const;

  /// Eigenvalues of the density matrix, ascending.
  std::vector<double> eigenvalues() const;
  /// Von Neumann entropy in bits.
  double entropy() const;

 private:
  DenseState(int n_qubits, bool pure, std::vector<Complex> data);

  int n_qubits_ = 0;
  bool pure_ = true;
  std::vector<Complex> data_;
};

}  // namespace nqkd
