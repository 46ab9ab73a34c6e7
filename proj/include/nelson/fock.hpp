// fock.hpp: truncated bosonic Fock space with a total-occupation cap
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nelson/modegrid.hpp"

namespace nelson {

using CVec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr std::size_t kDefaultDimCap = 4'000'000;

// States are multisets of mode indices (one entry per quantum, ascending),
// ordered by total occupation and then lexicographically: for two modes and
// n_max = 2 this gives 00, 10, 01, 20, 11, 02.
class FockBasis {
 public:
  struct Link {
    std::uint32_t mode;
    std::uint32_t target;  // index of a_mode |s>
    double amp;            // √n_mode(s)
  };

  FockBasis(int modes, int n_max, std::size_t dim_cap = kDefaultDimCap);

  std::size_t dim() const { return total_.size(); }
  int modes() const { return modes_; }
  int n_max() const { return n_max_; }
  int total(std::size_t s) const { return total_[s]; }
  std::size_t sector_begin(int n) const { return sector_[n]; }
  const std::uint16_t* quanta(std::size_t s) const { return &quanta_[s * stride_]; }
  std::vector<int> occupation(std::size_t s) const;
  std::optional<std::size_t> index_of(const std::vector<int>& occupation) const;
  std::optional<std::size_t> index_of_quanta(const std::uint16_t* sorted, int n) const;

  const Link* links_begin(std::size_t s) const { return links_.data() + offsets_[s]; }
  const Link* links_end(std::size_t s) const { return links_.data() + offsets_[s + 1]; }

  // State permutation induced by a mode permutation.
  std::vector<std::uint32_t> permutation(const std::vector<int>& mode_perm) const;

  const std::string& hash() const { return hash_; }

  static std::size_t dimension(int modes, int n_max);

 private:
  struct KeyHash {
    std::size_t operator()(const std::u16string& k) const { return std::hash<std::u16string>{}(k); }
  };
  int modes_, n_max_, stride_ = 1;
  std::vector<std::uint16_t> quanta_;
  std::vector<int> total_;
  std::vector<std::size_t> sector_;
  std::vector<std::size_t> offsets_;
  std::vector<Link> links_;
  std::unordered_map<std::u16string, std::size_t, KeyHash> index_;
  std::string hash_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

// out += scale · a*(g) psi   /   out += scale · a(g) psi  (a antilinear in g)
void add_create(const FockBasis& b, const CVec& g, const CVec& psi, CVec& out, cplx scale = 1.0);
void add_annihilate(const FockBasis& b, const CVec& g, const CVec& psi, CVec& out, cplx scale = 1.0);

// Per-state value of dΓ(h) = Σ_i h_i n_i.
Eigen::VectorXd dgamma_diagonal(const FockBasis& b, const Eigen::VectorXd& h);

// Self-adjoint (or general) operator acting on a basis, stored either as a
// sparse matrix or as a matrix-free product.
class FiberOperator {
 public:
  using Matvec = std::function<void(const CVec&, CVec&)>;

  FiberOperator(BasisPtr basis, SpMat m, bool hermitian);
  FiberOperator(BasisPtr basis, Matvec mv, bool hermitian);

  const BasisPtr& basis() const { return basis_; }
  std::size_t dim() const { return basis_->dim(); }
  bool hermitian() const { return hermitian_; }
  const SpMat* sparse() const { return sparse_ ? &*sparse_ : nullptr; }

  // Real diagonal (exact for sparse operators, an approximation supplied by
  // the assembler for matrix-free ones); empty if unknown. Used as a
  // preconditioner only.
  Eigen::VectorXd diagonal() const;
  void set_diagonal(Eigen::VectorXd d) { diag_ = std::make_shared<const Eigen::VectorXd>(std::move(d)); }

  void apply(const CVec& x, CVec& y) const;
  CVec operator*(const CVec& x) const;
  Eigen::MatrixXcd dense(std::size_t cap = 4000) const;
  FiberOperator adjoint() const;  // sparse operators only

  // max |A − A*| over dense entries for small dimensions; for larger ones the
  // defect is probed with deterministic random vectors.
  double hermiticity_defect() const;

 private:
  BasisPtr basis_;
  std::optional<SpMat> sparse_;
  Matvec mv_;
  std::shared_ptr<const Eigen::VectorXd> diag_;
  bool hermitian_;
};

FiberOperator annihilate(int mode, const BasisPtr& basis);
FiberOperator create(int mode, const BasisPtr& basis);
FiberOperator dgamma(const Eigen::VectorXd& h, const BasisPtr& basis);

CVec vacuum(const FockBasis& b);

struct TailedVector {
  CVec vec;
  double tail = 0;  // norm² lost beyond the occupation cap
};

// e^{-‖g‖²/2} Π g_i^{n_i}/√(n_i!), with the Poisson tail P(N > n_max).
TailedVector coherent_vector(const ModeFunction& g, const FockBasis& b, double tol = 1e-2);

// P W(g) psi with W(g) = exp(a*(g) − a(g)), evaluated in normal order
// e^{-‖g‖²/2} e^{a*(g)} e^{-a(g)}; both series terminate on the truncated
// space, so the result is the exact projection. tail = ‖psi‖² − ‖P W psi‖².
TailedVector weyl_apply(const CVec& g, const CVec& psi, const FockBasis& b, double tol = 1e-2);
TailedVector weyl_apply(const ModeFunction& g, const CVec& psi, const FockBasis& b, double tol = 1e-2);

// Krylov exponential of the compressed generator P(a*(g) − a(g))P with step
// halving until successive results agree to `tol`. Independent check only.
CVec weyl_apply_krylov(const CVec& g, const CVec& psi, const FockBasis& b, double tol = 1e-9);

struct WeylPath {
  std::function<CVec(double)> F;
  std::function<CVec(double)> dF;
};

// ‖(W(F_{s+h}) − W(F_{s−h}))ψ/2h − W(F_s)(a*(∂F) − a(∂F) + i Im⟨F,∂F⟩)ψ‖
double weyl_derivative_check(const WeylPath& path, double s, double h, const CVec& psi, const FockBasis& b);

// Operator norms by power iteration on B*B.
struct BoundRatios {
  double energy_annihilate;  // ‖a(f)(1+H_f)^{-1/2}‖ / ‖f‖_ω
  double energy_create;      // ‖a*(f)(1+H_f)^{-1/2}‖ / ‖f‖_ω
  double number_annihilate;  // ‖a(f)(1+N)^{-1/2}‖ / ‖f‖₂
  double number_create;      // ‖a*(f)(1+N)^{-1/2}‖ / ‖f‖₂
};
BoundRatios operator_bound_ratios(const ModeFunction& f, const FockBasis& b, int iterations = 300);

}  // namespace nelson
