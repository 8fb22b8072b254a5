#include "csl/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace csl {

namespace {

std::vector<std::size_t> strides_of(const std::vector<int>& dims) {
  std::vector<std::size_t> s(dims.size(), 1);
  for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) {
    s[i] = s[i + 1] * static_cast<std::size_t>(dims[i + 1]);
  }
  return s;
}

// Full-space offsets of every multi-index over the registers at `positions`,
// enumerated with the first listed position most significant.
std::vector<std::size_t> offsets(const std::vector<int>& dims,
                                 const std::vector<int>& positions) {
  auto strides = strides_of(dims);
  std::vector<std::size_t> out{0};
  for (int p : positions) {
    std::vector<std::size_t> next;
    next.reserve(out.size() * dims[p]);
    for (std::size_t base : out) {
      for (int i = 0; i < dims[p]; ++i) next.push_back(base + i * strides[p]);
    }
    out.swap(next);
  }
  return out;
}

std::vector<int> positions_of(const RegisterLayout& layout,
                              const std::vector<std::string>& labels) {
  std::vector<int> pos;
  for (const auto& l : labels) {
    int i = layout.index_of(l);
    if (i < 0) throw ContractViolation("unknown register label '" + l + "'");
    pos.push_back(i);
  }
  return pos;
}

// Index map new -> old for reordering the layout's registers.
std::vector<std::size_t> permutation_map(const RegisterLayout& layout,
                                         const std::vector<std::string>& order) {
  if (order.size() != layout.size()) {
    throw ContractViolation("permutation must name every register exactly once");
  }
  auto pos = positions_of(layout, order);
  std::set<int> seen(pos.begin(), pos.end());
  if (seen.size() != pos.size()) throw ContractViolation("duplicate label in permutation");
  return offsets(layout.dims(), pos);
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ContractViolation(std::string(what) + ": non-finite entry");
}

void require_same_dim(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation("dimension mismatch");
  }
}

}  // namespace

RegisterLayout::RegisterLayout(std::vector<Register> registers)
    : registers_(std::move(registers)) {
  std::set<std::string> seen;
  for (const auto& r : registers_) {
    if (r.dim < 1) throw ContractViolation("register '" + r.label + "' has dim < 1");
    if (!seen.insert(r.label).second) {
      throw ContractViolation("duplicate register label '" + r.label + "'");
    }
  }
}

RegisterLayout RegisterLayout::single(const std::string& label, int dim) {
  return RegisterLayout({{label, dim}});
}

int RegisterLayout::dim() const {
  int d = 1;
  for (const auto& r : registers_) d *= r.dim;
  return d;
}

std::vector<std::string> RegisterLayout::labels() const {
  std::vector<std::string> out;
  for (const auto& r : registers_) out.push_back(r.label);
  return out;
}

std::vector<int> RegisterLayout::dims() const {
  std::vector<int> out;
  for (const auto& r : registers_) out.push_back(r.dim);
  return out;
}

int RegisterLayout::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < registers_.size(); ++i) {
    if (registers_[i].label == label) return static_cast<int>(i);
  }
  return -1;
}

RegisterLayout RegisterLayout::subset(const std::vector<std::string>& labels) const {
  positions_of(*this, labels);
  std::vector<Register> out;
  for (const auto& r : registers_) {
    if (std::find(labels.begin(), labels.end(), r.label) != labels.end()) out.push_back(r);
  }
  return RegisterLayout(out);
}

RegisterLayout RegisterLayout::complement(const std::vector<std::string>& labels) const {
  positions_of(*this, labels);
  std::vector<Register> out;
  for (const auto& r : registers_) {
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) out.push_back(r);
  }
  return RegisterLayout(out);
}

RegisterLayout RegisterLayout::reordered(const std::vector<std::string>& order) const {
  std::vector<Register> out;
  for (int p : positions_of(*this, order)) out.push_back(registers_[p]);
  return RegisterLayout(out);
}

RegisterLayout RegisterLayout::concat(const RegisterLayout& other) const {
  auto regs = registers_;
  regs.insert(regs.end(), other.registers_.begin(), other.registers_.end());
  return RegisterLayout(regs);
}

DensityOperator::DensityOperator(Matrix matrix, RegisterLayout layout, SkipSpectrum)
    : layout_(std::move(layout)) {
  if (matrix.rows() != matrix.cols()) throw ContractViolation("density operator must be square");
  if (matrix.rows() != layout_.dim()) {
    std::ostringstream os;
    os << "layout dimension " << layout_.dim() << " does not match matrix dimension "
       << matrix.rows();
    throw ContractViolation(os.str());
  }
  require_finite(matrix, "density operator");
  if (!is_hermitian(matrix)) throw ContractViolation("density operator is not Hermitian");
  matrix_ = hermitian_part(matrix);
  double tr = matrix_.trace().real();
  if (std::abs(tr - 1.0) > tol::kTrace) {
    std::ostringstream os;
    os.precision(17);
    os << "density operator trace " << tr << " differs from 1";
    throw ContractViolation(os.str());
  }
}

DensityOperator::DensityOperator(Matrix matrix, RegisterLayout layout)
    : DensityOperator(std::move(matrix), std::move(layout), SkipSpectrum{}) {
  RealVector ev = eigenvalues_hermitian(matrix_);
  if (ev.size() > 0 && ev(ev.size() - 1) < -tol::kEigenFloor) {
    throw ContractViolation("density operator has a negative eigenvalue");
  }
}

DensityOperator DensityOperator::trusted(Matrix matrix, RegisterLayout layout) {
  return DensityOperator(std::move(matrix), std::move(layout), SkipSpectrum{});
}

DensityOperator::DensityOperator(Matrix matrix)
    : DensityOperator(matrix, RegisterLayout::single("S", static_cast<int>(matrix.rows()))) {}

DensityOperator DensityOperator::maximally_mixed(const RegisterLayout& layout) {
  int d = layout.dim();
  return DensityOperator(Matrix::Identity(d, d) / static_cast<double>(d), layout);
}

DensityOperator DensityOperator::from_pure(const PureStateVector& psi) {
  return DensityOperator(psi.projector(), psi.layout());
}

DensityOperator DensityOperator::diagonal(std::span<const double> probs,
                                          const std::string& label) {
  Matrix m = Matrix::Zero(probs.size(), probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) m(i, i) = probs[i];
  return DensityOperator(m, RegisterLayout::single(label, static_cast<int>(probs.size())));
}

PureStateVector::PureStateVector(Vector amplitudes, RegisterLayout layout)
    : amplitudes_(std::move(amplitudes)), layout_(std::move(layout)) {
  if (amplitudes_.size() != layout_.dim()) {
    throw ContractViolation("layout dimension does not match vector length");
  }
  if (!amplitudes_.allFinite()) throw ContractViolation("pure state: non-finite amplitude");
  if (std::abs(amplitudes_.norm() - 1.0) > tol::kNorm) {
    throw ContractViolation("pure state is not normalized");
  }
}

PureStateVector::PureStateVector(Vector amplitudes)
    : PureStateVector(amplitudes,
                      RegisterLayout::single("S", static_cast<int>(amplitudes.size()))) {}

Effect::Effect(Matrix matrix) : matrix_(std::move(matrix)) {
  if (!is_hermitian(matrix_)) throw ContractViolation("effect is not Hermitian");
  RealVector ev = eigenvalues_hermitian(matrix_);
  if (ev.size() > 0 && (ev(ev.size() - 1) < -tol::kEigenFloor || ev(0) > 1.0 + tol::kEigenFloor)) {
    throw ContractViolation("effect eigenvalues outside [0,1]");
  }
}

double hermitian_deviation(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double tol) { return hermitian_deviation(m) <= tol; }

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

EigenSystem eig_hermitian(const Matrix& h) {
  if (!is_hermitian(h)) throw ContractViolation("eig_hermitian: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  const auto n = h.rows();
  EigenSystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

RealVector eigenvalues_hermitian(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

double rank_cutoff(const RealVector& eigenvalues) {
  if (eigenvalues.size() == 0) return 0.0;
  double top = std::max(0.0, eigenvalues.maxCoeff());
  return tol::kRank * top;
}

int numerical_rank(const Matrix& psd) {
  RealVector ev = eigenvalues_hermitian(psd);
  double cut = rank_cutoff(ev);
  int r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) ++r;
  }
  return r;
}

namespace {

template <class F>
Matrix spectral_map(const Matrix& psd, F&& f) {
  EigenSystem es = eig_hermitian(psd);
  double cut = rank_cutoff(es.values);
  RealVector mapped(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    mapped(i) = es.values(i) > cut ? f(es.values(i)) : 0.0;
  }
  return es.vectors * mapped.asDiagonal() * es.vectors.adjoint();
}

}  // namespace

Matrix support_projector(const Matrix& psd) {
  return spectral_map(psd, [](double) { return 1.0; });
}

Matrix power_on_support(const Matrix& psd, double exponent) {
  return spectral_map(psd, [exponent](double x) { return std::pow(x, exponent); });
}

Matrix log2_on_support(const Matrix& psd) {
  return spectral_map(psd, [](double x) { return std::log2(x); });
}

Matrix sqrt_psd(const Matrix& psd) {
  EigenSystem es = eig_hermitian(psd);
  RealVector r = es.values.cwiseMax(0.0).cwiseSqrt();
  return es.vectors * r.asDiagonal() * es.vectors.adjoint();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

Matrix kron_all(std::span<const Matrix> factors) {
  Matrix out = Matrix::Ones(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

Matrix kron_apply_right(const Matrix& m, std::span<const Matrix> factors) {
  Eigen::Index total = 1;
  for (const auto& f : factors) {
    if (f.rows() != f.cols()) throw ContractViolation("kron_apply_right: square factors only");
    total *= f.rows();
  }
  if (m.cols() != total) throw ContractViolation("kron_apply_right: dimension mismatch");
  Matrix cur = m;
  Matrix next(m.rows(), m.cols());
  Eigen::Index left = 1;
  for (const auto& f : factors) {
    const Eigen::Index d = f.rows();
    const Eigen::Index right = total / (left * d);
    next.setZero();
    for (Eigen::Index a = 0; a < left; ++a) {
      for (Eigen::Index c = 0; c < right; ++c) {
        for (Eigen::Index b = 0; b < d; ++b) {
          const Eigen::Index src = (a * d + b) * right + c;
          for (Eigen::Index b2 = 0; b2 < d; ++b2) {
            const Complex w = f(b, b2);
            if (w == Complex(0.0, 0.0)) continue;
            next.col((a * d + b2) * right + c) += w * cur.col(src);
          }
        }
      }
    }
    std::swap(cur, next);
    left *= d;
  }
  return cur;
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  return DensityOperator(kron(a.matrix(), b.matrix()), a.layout().concat(b.layout()));
}

PureStateVector tensor(const PureStateVector& a, const PureStateVector& b) {
  return PureStateVector(kron(a.amplitudes(), b.amplitudes()), a.layout().concat(b.layout()));
}

Matrix partial_trace(const Matrix& m, const RegisterLayout& layout,
                     const std::vector<std::string>& keep) {
  if (m.rows() != layout.dim() || m.cols() != layout.dim()) {
    throw ContractViolation("partial_trace: layout does not match operator");
  }
  RegisterLayout kept = layout.subset(keep);
  std::vector<int> kpos, tpos;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    (kept.contains(layout[i].label) ? kpos : tpos).push_back(static_cast<int>(i));
  }
  auto ko = offsets(layout.dims(), kpos);
  auto to = offsets(layout.dims(), tpos);
  const auto dk = static_cast<Eigen::Index>(ko.size());
  Matrix out = Matrix::Zero(dk, dk);
  for (Eigen::Index a = 0; a < dk; ++a) {
    for (Eigen::Index b = 0; b < dk; ++b) {
      Complex acc = 0.0;
      for (std::size_t t : to) acc += m(ko[a] + t, ko[b] + t);
      out(a, b) = acc;
    }
  }
  return out;
}

DensityOperator partial_trace(const DensityOperator& rho, const std::vector<std::string>& keep) {
  RegisterLayout kept = rho.layout().subset(keep);
  Matrix m = partial_trace(rho.matrix(), rho.layout(), keep);
  return DensityOperator(m, kept);
}

Matrix permute_registers(const Matrix& m, const RegisterLayout& layout,
                         const std::vector<std::string>& order) {
  auto p = permutation_map(layout, order);
  const auto d = static_cast<Eigen::Index>(p.size());
  Matrix out(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) out(i, j) = m(p[i], p[j]);
  }
  return out;
}

Vector permute_registers(const Vector& v, const RegisterLayout& layout,
                         const std::vector<std::string>& order) {
  auto p = permutation_map(layout, order);
  Vector out(static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) out(i) = v(p[i]);
  return out;
}

DensityOperator permute_registers(const DensityOperator& rho,
                                  const std::vector<std::string>& order) {
  return DensityOperator(permute_registers(rho.matrix(), rho.layout(), order),
                         rho.layout().reordered(order));
}

PureStateVector permute_registers(const PureStateVector& psi,
                                  const std::vector<std::string>& order) {
  return PureStateVector(permute_registers(psi.amplitudes(), psi.layout(), order),
                         psi.layout().reordered(order));
}

DensityOperator reduced_state(const PureStateVector& psi, const std::vector<std::string>& keep) {
  RegisterLayout kept = psi.layout().subset(keep);
  RegisterLayout rest = psi.layout().complement(keep);
  std::vector<std::string> order = kept.labels();
  for (const auto& l : rest.labels()) order.push_back(l);
  Vector v = permute_registers(psi.amplitudes(), psi.layout(), order);
  Eigen::Map<const Matrix> m(v.data(), rest.dim(), kept.dim());
  Matrix r = m.transpose() * m.conjugate();
  return DensityOperator(hermitian_part(r), kept);
}

Matrix embed_local(const Matrix& op, const RegisterLayout& layout,
                   const std::vector<std::string>& targets) {
  RegisterLayout t = layout.reordered(targets);
  if (op.rows() != t.dim() || op.cols() != t.dim()) {
    throw ContractViolation("embed_local: operator does not match target registers");
  }
  RegisterLayout rest = layout.complement(targets);
  Matrix big = kron(op, Matrix::Identity(rest.dim(), rest.dim()));
  return permute_registers(big, t.concat(rest), layout.labels());
}

Vector apply_local(const Matrix& op, const Vector& v, const RegisterLayout& layout,
                   const std::vector<std::string>& targets) {
  RegisterLayout t = layout.reordered(targets);
  if (op.rows() != t.dim() || op.cols() != t.dim()) {
    throw ContractViolation("apply_local: operator does not match target registers");
  }
  RegisterLayout rest = layout.complement(targets);
  std::vector<std::string> order = targets;
  for (const auto& l : rest.labels()) order.push_back(l);
  Vector w = permute_registers(v, layout, order);
  Eigen::Map<Matrix> m(w.data(), rest.dim(), t.dim());
  Matrix applied = m * op.transpose();
  Vector flat = Eigen::Map<Vector>(applied.data(), applied.size());
  return permute_registers(flat, t.concat(rest), layout.labels());
}

PureStateVector purify(const DensityOperator& rho, const std::string& ancilla_label) {
  if (rho.layout().contains(ancilla_label)) {
    throw ContractViolation("ancilla label '" + ancilla_label + "' already in use");
  }
  const int d = rho.dim();
  EigenSystem es = eig_hermitian(rho.matrix());
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i) {
    double w = std::sqrt(std::max(0.0, es.values(i)));
    if (w == 0.0) continue;
    Vector e = Vector::Zero(d);
    e(i) = 1.0;
    psi += w * kron(Vector(es.vectors.col(i)), e);
  }
  psi /= psi.norm();
  return PureStateVector(psi, rho.layout().concat(RegisterLayout::single(ancilla_label, d)));
}

double trace_distance(const Matrix& rho, const Matrix& sigma) {
  require_same_dim(rho, sigma);
  RealVector ev = eigenvalues_hermitian(rho - sigma);
  return std::clamp(0.5 * ev.cwiseAbs().sum(), 0.0, 1.0);
}

double fidelity(const Matrix& rho, const Matrix& sigma) {
  require_same_dim(rho, sigma);
  Matrix s = sqrt_psd(rho);
  RealVector ev = eigenvalues_hermitian(s * sigma * s);
  double f = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) f += std::sqrt(std::max(0.0, ev(i)));
  return std::clamp(f, 0.0, 1.0);
}

double purified_distance(const Matrix& rho, const Matrix& sigma) {
  double f = fidelity(rho, sigma);
  return std::sqrt(std::max(0.0, 1.0 - f * f));
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}
double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  return fidelity(rho.matrix(), sigma.matrix());
}
double purified_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  return purified_distance(rho.matrix(), sigma.matrix());
}

Matrix HelstromMeasurement::apply(const Matrix& state) const {
  Matrix out = Matrix::Zero(2, 2);
  out(0, 0) = (positive * state).trace().real();
  out(1, 1) = (complement * state).trace().real();
  return out;
}

HelstromMeasurement helstrom_channel(const Matrix& rho, const Matrix& sigma) {
  require_same_dim(rho, sigma);
  EigenSystem es = eig_hermitian(rho - sigma);
  const auto d = rho.rows();
  Matrix p = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (es.values(i) > 0.0) p += es.vectors.col(i) * es.vectors.col(i).adjoint();
  }
  return {p, Matrix::Identity(d, d) - p};
}

Matrix ginibre(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      double re = n01(rng);
      double im = n01(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

Vector random_pure_vector(int dim, Rng& rng) {
  Vector v = ginibre(dim, 1, rng).col(0);
  return v / v.norm();
}

Matrix random_unitary(int dim, Rng& rng) {
  Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    double a = std::abs(r(i, i));
    Complex phase = a > 0 ? r(i, i) / a : Complex(1.0);
    q.col(i) *= phase;
  }
  return q;
}

std::vector<double> random_simplex(int dim, Rng& rng) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(dim);
  double s = 0.0;
  for (auto& x : p) {
    x = ex(rng);
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

PureStateVector sample_pure(const RegisterLayout& layout, Rng& rng) {
  return PureStateVector(random_pure_vector(layout.dim(), rng), layout);
}

DensityOperator sample_mixed(const RegisterLayout& layout, Rng& rng) {
  return sample_rank_limited(layout, layout.dim(), rng);
}

DensityOperator sample_rank_limited(const RegisterLayout& layout, int rank, Rng& rng) {
  const int d = layout.dim();
  if (rank < 1 || rank > d) throw ContractViolation("rank must lie in [1, dim]");
  Matrix g = ginibre(d, rank, rng);
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityOperator(hermitian_part(m), layout);
}

SampledState sample(SampleKind kind, const RegisterLayout& layout, std::uint64_t seed, int rank) {
  Rng rng(seed);
  switch (kind) {
    case SampleKind::PureHaar:
      return sample_pure(layout, rng);
    case SampleKind::MixedHilbertSchmidt:
      return sample_mixed(layout, rng);
    case SampleKind::RankLimited:
      return sample_rank_limited(layout, rank, rng);
  }
  throw ContractViolation("unknown sample kind");
}

Rng derive_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x6373u};
  return Rng(seq);
}

}  // namespace csl
