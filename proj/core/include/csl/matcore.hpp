#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace csl {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

namespace tol {
inline constexpr double kHermitian = 1e-10;
inline constexpr double kEigenFloor = 1e-10;
inline constexpr double kTrace = 1e-10;
inline constexpr double kNorm = 1e-10;
// Eigenvalues at or below kRank * lambda_max count as zero.
inline constexpr double kRank = 1e-9;
// Mass of rho outside supp(sigma) tolerated by the support test.
inline constexpr double kSupport = 1e-9;
// Tr[rho sigma] at or below this means the two states are orthogonal.
inline constexpr double kOrthogonal = 1e-14;
}  // namespace tol

// Raised when an operation's precondition is violated.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Register {
  std::string label;
  int dim = 1;
  bool operator==(const Register&) const = default;
};

// Ordered list of subsystems. The first register is the most significant
// tensor factor, matching the Kronecker product convention.
class RegisterLayout {
 public:
  RegisterLayout() = default;
  explicit RegisterLayout(std::vector<Register> registers);
  static RegisterLayout single(const std::string& label, int dim);

  std::size_t size() const { return registers_.size(); }
  int dim() const;
  const Register& operator[](std::size_t i) const { return registers_[i]; }
  const std::vector<Register>& registers() const { return registers_; }
  std::vector<std::string> labels() const;
  std::vector<int> dims() const;

  // Position of a label, or -1.
  int index_of(const std::string& label) const;
  bool contains(const std::string& label) const { return index_of(label) >= 0; }

  // Registers named in `labels`, kept in this layout's order.
  RegisterLayout subset(const std::vector<std::string>& labels) const;
  // Registers not named in `labels`, kept in this layout's order.
  RegisterLayout complement(const std::vector<std::string>& labels) const;
  // Registers in exactly the order given.
  RegisterLayout reordered(const std::vector<std::string>& order) const;
  RegisterLayout concat(const RegisterLayout& other) const;

  bool operator==(const RegisterLayout&) const = default;

 private:
  std::vector<Register> registers_;
};

class PureStateVector;

class DensityOperator {
 public:
  // The trivial one-dimensional state.
  DensityOperator() : matrix_(Matrix::Ones(1, 1)) {}
  DensityOperator(Matrix matrix, RegisterLayout layout);
  // Single register named "S".
  explicit DensityOperator(Matrix matrix);

  static DensityOperator maximally_mixed(const RegisterLayout& layout);
  static DensityOperator from_pure(const PureStateVector& psi);
  static DensityOperator diagonal(std::span<const double> probs,
                                  const std::string& label = "S");
  // Skips the eigenvalue scan (still checks shape, Hermiticity and trace).
  // For operators assembled from validated states, e.g. large tensor mixtures.
  static DensityOperator trusted(Matrix matrix, RegisterLayout layout);

  const Matrix& matrix() const { return matrix_; }
  const RegisterLayout& layout() const { return layout_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  struct SkipSpectrum {};
  DensityOperator(Matrix matrix, RegisterLayout layout, SkipSpectrum);

  Matrix matrix_;
  RegisterLayout layout_;
};

class PureStateVector {
 public:
  PureStateVector() : amplitudes_(Vector::Ones(1)) {}
  PureStateVector(Vector amplitudes, RegisterLayout layout);
  explicit PureStateVector(Vector amplitudes);

  const Vector& amplitudes() const { return amplitudes_; }
  const RegisterLayout& layout() const { return layout_; }
  int dim() const { return static_cast<int>(amplitudes_.size()); }
  Matrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

 private:
  Vector amplitudes_;
  RegisterLayout layout_;
};

class Effect {
 public:
  Effect() : matrix_(Matrix::Zero(1, 1)) {}
  explicit Effect(Matrix matrix);
  const Matrix& matrix() const { return matrix_; }

 private:
  Matrix matrix_;
};

struct EigenSystem {
  RealVector values;  // non-increasing
  Matrix vectors;     // columns match values
};

double hermitian_deviation(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = tol::kHermitian);
Matrix hermitian_part(const Matrix& m);

EigenSystem eig_hermitian(const Matrix& h);
RealVector eigenvalues_hermitian(const Matrix& h);

// Threshold below which an eigenvalue counts as zero.
double rank_cutoff(const RealVector& eigenvalues);
int numerical_rank(const Matrix& psd);
Matrix support_projector(const Matrix& psd);

// Fractional / negative powers with zero eigenvalues mapped to zero.
Matrix power_on_support(const Matrix& psd, double exponent);
// log2 on the support, zero on the kernel.
Matrix log2_on_support(const Matrix& psd);
Matrix sqrt_psd(const Matrix& psd);

Matrix kron(const Matrix& a, const Matrix& b);
Vector kron(const Vector& a, const Vector& b);
Matrix kron_all(std::span<const Matrix> factors);
// m * (F_1 (x) ... (x) F_k) without forming the Kronecker product.
Matrix kron_apply_right(const Matrix& m, std::span<const Matrix> factors);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);
PureStateVector tensor(const PureStateVector& a, const PureStateVector& b);

Matrix partial_trace(const Matrix& m, const RegisterLayout& layout,
                     const std::vector<std::string>& keep);
DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<std::string>& keep);
// Reduced state of a pure vector, computed without forming |psi><psi|.
DensityOperator reduced_state(const PureStateVector& psi,
                              const std::vector<std::string>& keep);

Matrix permute_registers(const Matrix& m, const RegisterLayout& layout,
                         const std::vector<std::string>& order);
Vector permute_registers(const Vector& v, const RegisterLayout& layout,
                         const std::vector<std::string>& order);
DensityOperator permute_registers(const DensityOperator& rho,
                                  const std::vector<std::string>& order);
PureStateVector permute_registers(const PureStateVector& psi,
                                  const std::vector<std::string>& order);

// op acts on `targets` (in the given order); identity elsewhere.
Matrix embed_local(const Matrix& op, const RegisterLayout& layout,
                   const std::vector<std::string>& targets);
Vector apply_local(const Matrix& op, const Vector& v, const RegisterLayout& layout,
                   const std::vector<std::string>& targets);

// Purification on layout + (ancilla_label, dim rho). Ancilla is padded
// to the full dimension even when rho is rank deficient.
PureStateVector purify(const DensityOperator& rho,
                       const std::string& ancilla_label = "P");

double trace_distance(const Matrix& rho, const Matrix& sigma);
double fidelity(const Matrix& rho, const Matrix& sigma);
double purified_distance(const Matrix& rho, const Matrix& sigma);
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);
double purified_distance(const DensityOperator& rho, const DensityOperator& sigma);

// Two-outcome measurement {P, I - P} with P the projector onto the
// positive part of rho - sigma.
struct HelstromMeasurement {
  Matrix positive;
  Matrix complement;
  // Outcome distribution as a diagonal 2x2 state.
  Matrix apply(const Matrix& state) const;
};
HelstromMeasurement helstrom_channel(const Matrix& rho, const Matrix& sigma);

enum class SampleKind { PureHaar, MixedHilbertSchmidt, RankLimited };

Matrix ginibre(int rows, int cols, Rng& rng);
Vector random_pure_vector(int dim, Rng& rng);
Matrix random_unitary(int dim, Rng& rng);
std::vector<double> random_simplex(int dim, Rng& rng);
PureStateVector sample_pure(const RegisterLayout& layout, Rng& rng);
DensityOperator sample_mixed(const RegisterLayout& layout, Rng& rng);
DensityOperator sample_rank_limited(const RegisterLayout& layout, int rank, Rng& rng);

using SampledState = std::variant<DensityOperator, PureStateVector>;
SampledState sample(SampleKind kind, const RegisterLayout& layout,
                    std::uint64_t seed, int rank = 1);

// Independent stream for (seed, index); stable across thread schedules.
Rng derive_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace csl
