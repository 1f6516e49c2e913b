#pragma once

// Plane-strain Q4 analysis on a StructuredMesh. Fixed DOFs are eliminated, so
// the solved system is the free-free block of K(alpha) = sum_e E(alpha_e) K_e.

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "nlgrade/error.hpp"
#include "nlgrade/filters.hpp"
#include "nlgrade/mesh.hpp"
#include "nlgrade/parallel.hpp"

namespace nlgrade {

using ElementMatrix = Eigen::Matrix<double, 8, 8>;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct ElasticityParams {
  double E0 = 1.0;  // MPa
  double nu = 0.3;

  void validate() const {
    require(E0 > 0.0, "fem: reference modulus E0 must be positive");
    require(nu >= 0.0 && nu < 0.5, "fem: Poisson's ratio must lie in [0, 0.5)");
  }
};

struct BoundaryConditions {
  std::vector<int> fixed_dofs;                // sorted, unique
  std::vector<std::pair<int, double>> loads;  // (dof, force in N)

  [[nodiscard]] Eigen::VectorXd load_vector(int num_dofs) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(num_dofs);
    for (const auto& [dof, value] : loads) f[dof] += value;
    return f;
  }

  void validate(int num_dofs) const {
    require(std::is_sorted(fixed_dofs.begin(), fixed_dofs.end()) &&
                std::adjacent_find(fixed_dofs.begin(), fixed_dofs.end()) == fixed_dofs.end(),
            "fem: fixed DOF list must be sorted and unique");
    require(fixed_dofs.size() >= 3, "fem: at least three constrained DOFs are required");
    for (int d : fixed_dofs) require(d >= 0 && d < num_dofs, "fem: fixed DOF out of range");
    for (const auto& [dof, value] : loads) {
      require(dof >= 0 && dof < num_dofs, "fem: loaded DOF out of range");
      require(!std::binary_search(fixed_dofs.begin(), fixed_dofs.end(), dof),
              "fem: a DOF cannot be both fixed and loaded");
    }
  }
};

/// Unit-modulus plane-strain stiffness of a square Q4 element of side h,
/// 2x2 Gauss quadrature. DOF order follows StructuredMesh::element_dofs.
inline ElementMatrix unit_element_stiffness(double h, double nu, double thickness = 1.0) {
  require(h > 0.0, "fem: element size must be positive");
  require(nu >= 0.0 && nu < 0.5, "fem: plane strain needs 0 <= nu < 0.5");
  const double c = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Eigen::Matrix3d D;
  D << c * (1.0 - nu), c * nu, 0.0,
       c * nu, c * (1.0 - nu), 0.0,
       0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0;

  constexpr std::array<double, 4> xi_n{-1.0, 1.0, 1.0, -1.0};
  constexpr std::array<double, 4> eta_n{-1.0, -1.0, 1.0, 1.0};
  const double g = 1.0 / std::sqrt(3.0);
  const double dxi_dx = 2.0 / h;
  const double detJ = 0.25 * h * h;

  ElementMatrix K = ElementMatrix::Zero();
  for (double xi : {-g, g})
    for (double eta : {-g, g}) {
      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        const double dNx = 0.25 * xi_n[a] * (1.0 + eta * eta_n[a]) * dxi_dx;
        const double dNy = 0.25 * eta_n[a] * (1.0 + xi * xi_n[a]) * dxi_dx;
        B(0, 2 * a) = dNx;
        B(1, 2 * a + 1) = dNy;
        B(2, 2 * a) = dNy;
        B(2, 2 * a + 1) = dNx;
      }
      K.noalias() += B.transpose() * D * B * (detJ * thickness);
    }
  return 0.5 * (K + K.transpose());
}

/// Unconstrained global stiffness over all DOFs.
inline SparseMatrix assemble(const StructuredMesh& mesh, std::span<const double> alpha,
                             const ElasticityParams& elasticity, double kappa) {
  require(static_cast<int>(alpha.size()) == mesh.num_elements(), "fem: alpha length mismatch");
  const ElementMatrix Ke = unit_element_stiffness(mesh.h, elasticity.nu, mesh.thickness);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_elements()) * 64);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double E = elemental_modulus(alpha[e], kappa, elasticity.E0);
    const auto dofs = mesh.element_dofs(e);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) trips.emplace_back(dofs[a], dofs[b], E * Ke(a, b));
  }
  SparseMatrix K(mesh.num_dofs(), mesh.num_dofs());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

enum class SolverKind { automatic, cholesky, cg };

struct SolverSettings {
  SolverKind kind = SolverKind::automatic;
  int direct_dof_limit = 200000;
  double direct_tolerance = 1e-10;
  double cg_tolerance = 1e-8;
  int cg_max_iterations = 0;  // 0: 10 x free DOFs
};

/// Reusable analysis object for one mesh and one set of boundary conditions.
/// The reduced sparsity pattern and its Cholesky ordering are computed once;
/// each assemble() only rewrites values.
class FemModel {
 public:
  FemModel(const StructuredMesh& mesh, BoundaryConditions bcs, ElasticityParams elasticity,
           double kappa, SolverSettings settings = {})
      : mesh_(mesh), bcs_(std::move(bcs)), elasticity_(elasticity), kappa_(kappa),
        settings_(settings) {
    elasticity_.validate();
    bcs_.validate(mesh_.num_dofs());
    require(kappa_ > 0.0 && kappa_ < 1.0, "fem: kappa must lie in (0,1)");
    Ke_ = unit_element_stiffness(mesh_.h, elasticity_.nu, mesh_.thickness);
    f_ = bcs_.load_vector(mesh_.num_dofs());
    build_pattern();
    use_direct_ = settings_.kind == SolverKind::cholesky ||
                  (settings_.kind == SolverKind::automatic &&
                   num_free_ <= settings_.direct_dof_limit);
  }

  [[nodiscard]] const StructuredMesh& mesh() const { return mesh_; }
  [[nodiscard]] const BoundaryConditions& bcs() const { return bcs_; }
  [[nodiscard]] const ElasticityParams& elasticity() const { return elasticity_; }
  [[nodiscard]] double kappa() const { return kappa_; }
  [[nodiscard]] const ElementMatrix& element_stiffness() const { return Ke_; }
  [[nodiscard]] const Eigen::VectorXd& load() const { return f_; }
  [[nodiscard]] const SparseMatrix& reduced_stiffness() const { return K_; }
  [[nodiscard]] int num_free() const { return num_free_; }
  [[nodiscard]] bool uses_direct_solver() const { return use_direct_; }

  void assemble(std::span<const double> alpha) {
    require(static_cast<int>(alpha.size()) == mesh_.num_elements(), "fem: alpha length mismatch");
    double* values = K_.valuePtr();
    std::fill(values, values + K_.nonZeros(), 0.0);
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      if (!std::isfinite(alpha[e])) {
        std::ostringstream msg;
        msg << "fem: non-finite alpha at element " << e;
        throw RuntimeFailure(msg.str());
      }
      const double E = elemental_modulus(alpha[e], kappa_, elasticity_.E0);
      const int* slot = &scatter_[static_cast<std::size_t>(e) * 64];
      for (int ab = 0; ab < 64; ++ab)
        if (slot[ab] >= 0) values[slot[ab]] += E * Ke_(ab / 8, ab % 8);
    }
    assembled_ = true;
  }

  /// Solves the reduced system and returns the full displacement vector.
  [[nodiscard]] Eigen::VectorXd solve() { return solve(f_); }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& f_full) {
    require(assembled_, "fem: assemble() must be called before solve()");
    require(f_full.size() == mesh_.num_dofs(), "fem: load vector length mismatch");
    Eigen::VectorXd f(num_free_);
    for (int d = 0; d < mesh_.num_dofs(); ++d)
      if (free_index_[d] >= 0) f[free_index_[d]] = f_full[d];
    Eigen::VectorXd x = Eigen::VectorXd::Zero(num_free_);
    const double fnorm = f.norm();
    if (fnorm > 0.0) x = use_direct_ ? solve_direct(f) : solve_cg(f);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh_.num_dofs());
    for (int d = 0; d < mesh_.num_dofs(); ++d)
      if (free_index_[d] >= 0) u[d] = x[free_index_[d]];
    return u;
  }

  [[nodiscard]] double compliance(const Eigen::VectorXd& u) const { return f_.dot(u); }

  /// u_e^T K_e u_e per element (unit modulus).
  [[nodiscard]] std::vector<double> element_energies(const Eigen::VectorXd& u) const {
    std::vector<double> out(static_cast<std::size_t>(mesh_.num_elements()));
    parallel_for(out.size(), [&](std::size_t e) {
      const auto dofs = mesh_.element_dofs(static_cast<int>(e));
      Eigen::Matrix<double, 8, 1> ue;
      for (int a = 0; a < 8; ++a) ue[a] = u[dofs[a]];
      out[e] = ue.dot(Ke_ * ue);
    });
    return out;
  }

  [[nodiscard]] double last_relative_residual() const { return last_residual_; }

 private:
  void build_pattern() {
    const int ndof = mesh_.num_dofs();
    free_index_.assign(static_cast<std::size_t>(ndof), -1);
    num_free_ = 0;
    for (int d = 0; d < ndof; ++d)
      if (!std::binary_search(bcs_.fixed_dofs.begin(), bcs_.fixed_dofs.end(), d))
        free_index_[d] = num_free_++;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mesh_.num_elements()) * 64);
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const auto dofs = mesh_.element_dofs(e);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          const int fa = free_index_[dofs[a]];
          const int fb = free_index_[dofs[b]];
          if (fa >= 0 && fb >= 0) trips.emplace_back(fa, fb, 1.0);
        }
    }
    K_.resize(num_free_, num_free_);
    K_.setFromTriplets(trips.begin(), trips.end());
    K_.makeCompressed();

    scatter_.assign(static_cast<std::size_t>(mesh_.num_elements()) * 64, -1);
    const int* outer = K_.outerIndexPtr();
    const int* inner = K_.innerIndexPtr();
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const auto dofs = mesh_.element_dofs(e);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          const int fa = free_index_[dofs[a]];
          const int fb = free_index_[dofs[b]];
          if (fa < 0 || fb < 0) continue;
          const int* pos = std::lower_bound(inner + outer[fb], inner + outer[fb + 1], fa);
          scatter_[static_cast<std::size_t>(e) * 64 + a * 8 + b] = static_cast<int>(pos - inner);
        }
    }
  }

  static double inf_norm(const SparseMatrix& A) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) rows[it.row()] += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
  }

  Eigen::VectorXd solve_direct(const Eigen::VectorXd& f) {
    if (!analyzed_) {
      llt_.analyzePattern(K_);
      analyzed_ = true;
    }
    llt_.factorize(K_);
    if (llt_.info() != Eigen::Success)
      throw RuntimeFailure("fem: sparse Cholesky factorization failed (matrix not SPD?)");
    Eigen::VectorXd x = llt_.solve(f);
    // Iterative refinement guards against the large modulus contrast. The
    // acceptance test is the normwise backward error; the plain relative
    // residual is floored near cond(K) * eps when void elements are present.
    const double knorm = inf_norm(K_);
    const double fnorm = f.lpNorm<Eigen::Infinity>();
    auto backward_error = [&](const Eigen::VectorXd& r) {
      return r.lpNorm<Eigen::Infinity>() / (knorm * x.lpNorm<Eigen::Infinity>() + fnorm);
    };
    double berr = 0.0;
    for (int pass = 0;; ++pass) {
      const Eigen::VectorXd r = f - K_ * x;
      last_residual_ = r.norm() / f.norm();
      berr = backward_error(r);
      if (berr <= settings_.direct_tolerance || pass == 3) break;
      x += llt_.solve(r);
    }
    if (berr > settings_.direct_tolerance) {
      std::ostringstream msg;
      msg << "fem: direct solve backward error " << berr << " exceeds tolerance "
          << settings_.direct_tolerance << " after refinement";
      throw RuntimeFailure(msg.str());
    }
    return x;
  }

  Eigen::VectorXd solve_cg(const Eigen::VectorXd& f) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(settings_.cg_tolerance);
    cg.setMaxIterations(settings_.cg_max_iterations > 0 ? settings_.cg_max_iterations
                                                        : 10 * num_free_);
    cg.compute(K_);
    Eigen::VectorXd x;
    if (warm_start_.size() == f.size())
      x = cg.solveWithGuess(f, warm_start_);
    else
      x = cg.solve(f);
    last_residual_ = (f - K_ * x).norm() / f.norm();
    if (cg.info() != Eigen::Success || last_residual_ > settings_.cg_tolerance * 1.5) {
      std::ostringstream msg;
      msg << "fem: conjugate gradient did not converge after " << cg.iterations()
          << " iterations, relative residual " << last_residual_;
      throw RuntimeFailure(msg.str());
    }
    warm_start_ = x;
    return x;
  }

  StructuredMesh mesh_;
  BoundaryConditions bcs_;
  ElasticityParams elasticity_;
  double kappa_;
  SolverSettings settings_;
  ElementMatrix Ke_;
  Eigen::VectorXd f_;
  std::vector<int> free_index_;
  int num_free_ = 0;
  SparseMatrix K_;
  std::vector<int> scatter_;
  bool assembled_ = false;
  bool use_direct_ = true;
  bool analyzed_ = false;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
  Eigen::VectorXd warm_start_;
  double last_residual_ = 0.0;
};

/// One-shot state solve: assemble, solve, return displacements.
inline Eigen::VectorXd solve_state(FemModel& model, std::span<const double> alpha) {
  model.assemble(alpha);
  return model.solve();
}

inline double compliance(const Eigen::VectorXd& u, const Eigen::VectorXd& f) { return f.dot(u); }

}  // namespace nlgrade
