#include "sympnf/quadratic.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "sympnf/errors.hpp"
#include "sympnf/rng.hpp"

namespace sympnf::quad {

namespace {

using Eigen::MatrixXd;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

// eigenvalue categories relative to |lambda|
enum class EigClass { Elliptic, Hyperbolic, Quadruple };

EigClass classify_eig(complex<double> lam, double eps) {
  double mod = std::abs(lam);
  if (std::abs(lam.real()) < eps * mod) return EigClass::Elliptic;
  if (std::abs(lam.imag()) < eps * mod) return EigClass::Hyperbolic;
  return EigClass::Quadruple;
}

VectorXd random_coeffs(int k, SplitMix64& rng) {
  VectorXd c(k);
  for (int i = 0; i < k; ++i) c(i) = rng.symmetric();
  return c;
}

MatrixXd combine(const QuadraticFamily& fam, const VectorXd& c) {
  MatrixXd A = MatrixXd::Zero(fam.space.dim(), fam.space.dim());
  for (int i = 0; i < fam.size(); ++i) A += c(i) * fam.members[i].A;
  return A;
}

// geometric multiplicity of lam as eigenvalue of B, by singular-value rank
int geometric_multiplicity(const MatrixXd& B, complex<double> lam, double eps) {
  MatrixXcd M = B.cast<complex<double>>();
  M.diagonal().array() -= lam;
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  const auto& sv = svd.singularValues();
  double thresh = eps * std::max(1.0, sv(0));
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  return static_cast<int>(B.rows()) - rank;
}

// true when B is semisimple with no zero eigenvalue (to tolerance)
bool generic_element_ok(const MatrixXd& B, double eps, std::string* why) {
  Eigen::EigenSolver<MatrixXd> es(B);
  if (es.info() != Eigen::Success) {
    if (why) *why = "eigen decomposition failed";
    return false;
  }
  VectorXcd lam = es.eigenvalues();
  double scale = lam.cwiseAbs().maxCoeff();
  if (scale <= 0.0) {
    if (why) *why = "generic combination is nilpotent or zero";
    return false;
  }
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i)) < eps * scale) {
      if (why) *why = "generic combination has a zero eigenvalue";
      return false;
    }
  }
  // cluster nearby eigenvalues, then check multiplicities
  std::vector<bool> used(lam.size(), false);
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (used[i]) continue;
    std::vector<Eigen::Index> cluster{i};
    for (Eigen::Index j = i + 1; j < lam.size(); ++j) {
      if (!used[j] && std::abs(lam(j) - lam(i)) < 100.0 * eps * scale) {
        cluster.push_back(j);
        used[j] = true;
      }
    }
    if (cluster.size() > 1) {
      int gm = geometric_multiplicity(B, lam(i), 100.0 * eps);
      if (gm < static_cast<int>(cluster.size())) {
        if (why) *why = "generic combination is not semisimple";
        return false;
      }
    }
  }
  return true;
}

// eigenvalue multiset symmetry under lam -> -lam and lam -> conj(lam)
bool spectrum_symmetric(const VectorXcd& lam, double eps) {
  double scale = std::max(1e-300, lam.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    double best_neg = 1e300, best_conj = 1e300;
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
      best_neg = std::min(best_neg, std::abs(lam(j) + lam(i)));
      best_conj = std::min(best_conj, std::abs(lam(j) - std::conj(lam(i))));
    }
    if (best_neg > eps * scale || best_conj > eps * scale) return false;
  }
  return true;
}

struct Counts {
  int k_e = 0, k_h = 0, k_f = 0;
  bool operator==(const Counts& o) const {
    return k_e == o.k_e && k_h == o.k_h && k_f == o.k_f;
  }
};

Counts count_classes(const VectorXcd& lam, double eps) {
  int ne = 0, nh = 0, nq = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    switch (classify_eig(lam(i), eps)) {
      case EigClass::Elliptic: ++ne; break;
      case EigClass::Hyperbolic: ++nh; break;
      case EigClass::Quadruple: ++nq; break;
    }
  }
  if (ne % 2 || nh % 2 || nq % 4)
    throw InstabilityError(
        "eigenvalue classes do not split into pairs and quadruples");
  return Counts{ne / 2, nh / 2, nq / 4};
}

}  // namespace

QuadraticHamiltonian::QuadraticHamiltonian(SymplecticSpace s,
                                           const Eigen::MatrixXd& coeffs)
    : space(s), A((coeffs + coeffs.transpose()) / 2.0) {
  if (coeffs.rows() != s.dim() || coeffs.cols() != s.dim())
    throw DimensionError("QuadraticHamiltonian: coefficient matrix must be 2n x 2n");
}

QuadraticFamily::QuadraticFamily(SymplecticSpace s,
                                 std::vector<QuadraticHamiltonian> m)
    : space(s), members(std::move(m)) {
  for (const auto& q : members)
    if (!(q.space == space))
      throw DimensionError("QuadraticFamily: members live on different spaces");
}

WilliamsonType make_williamson(int k_e, int k_h, int k_f, int m, int n) {
  if (k_e < 0 || k_h < 0 || k_f < 0 || m < 0 || n < m)
    throw ArityError("WilliamsonType: counts must be nonnegative with m <= n");
  if (k_e + k_h + 2 * k_f != n - m)
    throw ArityError("WilliamsonType: k_e + k_h + 2 k_f must equal n - m");
  return WilliamsonType{k_e, k_h, k_f, m, n};
}

QuadraticHamiltonian poisson_bracket(const QuadraticHamiltonian& a,
                                     const QuadraticHamiltonian& b) {
  if (!(a.space == b.space))
    throw DimensionError("poisson_bracket: mismatched spaces");
  const Eigen::MatrixXd J = a.space.J();
  Eigen::MatrixXd C = 2.0 * (a.A * J * b.A - b.A * J * a.A);
  return QuadraticHamiltonian(a.space, C);
}

Eigen::MatrixXd hamiltonian_matrix(const QuadraticHamiltonian& q) {
  return 2.0 * q.space.J() * q.A;
}

NondegeneracyReport is_nondegenerate(const QuadraticFamily& fam,
                                     const ClassifyOptions& opts) {
  NondegeneracyReport rep;
  const int n = fam.space.n;
  if (fam.size() != n)
    throw ArityError("is_nondegenerate: family must have n members");

  // (i) pairwise brackets vanish
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double scale = std::max(
          1.0, fam.members[i].A.norm() * fam.members[j].A.norm());
      double r = poisson_bracket(fam.members[i], fam.members[j]).A
                     .cwiseAbs()
                     .maxCoeff();
      rep.worst_bracket = std::max(rep.worst_bracket, r);
      if (r > opts.eps * scale) {
        rep.failure = "members do not Poisson-commute";
        return rep;
      }
    }
  }

  // (ii) linear independence of the coefficient matrices
  Eigen::MatrixXd stacked(n, fam.space.dim() * fam.space.dim());
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd Ai = fam.members[i].A;
    stacked.row(i) = Eigen::Map<Eigen::VectorXd>(Ai.data(), Ai.size());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
  const auto& sv = svd.singularValues();
  rep.independence_sigma = sv(sv.size() - 1) / std::max(1e-300, sv(0));
  if (rep.independence_sigma < opts.eps) {
    rep.failure = "members are linearly dependent";
    return rep;
  }

  // (iii) some generic combination is semisimple with no zero eigenvalue
  SplitMix64 rng(opts.seed);
  std::string why = "no generic draw succeeded";
  for (int t = 0; t < opts.trials; ++t) {
    Eigen::MatrixXd B = 2.0 * fam.space.J() * combine(fam, random_coeffs(n, rng));
    if (generic_element_ok(B, opts.eps, &why)) {
      rep.ok = true;
      return rep;
    }
  }
  rep.failure = why;
  return rep;
}

ClassificationResult williamson_type(const QuadraticFamily& fam, int m,
                                     const ClassifyOptions& opts) {
  NondegeneracyReport nd = is_nondegenerate(fam, opts);
  if (!nd.ok)
    throw NondegeneracyError("williamson_type: family is degenerate: " +
                             nd.failure);

  const int corank = fam.space.n;
  SplitMix64 rng(opts.seed + 1);
  bool have = false;
  Counts counts;
  std::vector<std::complex<double>> first_eigs;
  for (int t = 0; t < opts.trials; ++t) {
    Eigen::MatrixXd B =
        2.0 * fam.space.J() * combine(fam, random_coeffs(corank, rng));
    Eigen::EigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success)
      throw NumericalDegeneracyError("williamson_type: eigen solver failed");
    Eigen::VectorXcd lam = es.eigenvalues();
    if (!spectrum_symmetric(lam, 1000.0 * opts.eps))
      throw InstabilityError(
          "williamson_type: spectrum not symmetric under negation/conjugation");
    Counts c = count_classes(lam, opts.eps);
    if (!have) {
      counts = c;
      have = true;
      first_eigs.assign(lam.data(), lam.data() + lam.size());
      std::sort(first_eigs.begin(), first_eigs.end(),
                [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() < b.real();
                  return a.imag() < b.imag();
                });
    } else if (!(c == counts)) {
      throw InstabilityError(
          "williamson_type: classification unstable across draws");
    }
  }
  ClassificationResult res;
  res.type = make_williamson(counts.k_e, counts.k_h, counts.k_f, m, corank + m);
  res.eigenvalues = std::move(first_eigs);
  return res;
}

// ---------------------------------------------------------------- builders

namespace {

void add_sym(Eigen::MatrixXd& A, int i, int j, double c) {
  if (i == j) {
    A(i, i) += c;
  } else {
    A(i, j) += c / 2.0;
    A(j, i) += c / 2.0;
  }
}

}  // namespace

QuadraticHamiltonian elliptic_block(int n, int i) {
  SymplecticSpace s(n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  add_sym(A, i - 1, i - 1, 1.0);          // x_i^2
  add_sym(A, n + i - 1, n + i - 1, 1.0);  // y_i^2
  return QuadraticHamiltonian(s, A);
}

QuadraticHamiltonian hyperbolic_block(int n, int i) {
  SymplecticSpace s(n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  add_sym(A, i - 1, n + i - 1, 1.0);  // x_i y_i
  return QuadraticHamiltonian(s, A);
}

std::pair<QuadraticHamiltonian, QuadraticHamiltonian> focus_focus_pair(int n,
                                                                       int i) {
  SymplecticSpace s(n);
  Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  add_sym(A1, i - 1, n + i, 1.0);       // x_i y_{i+1}
  add_sym(A1, i, n + i - 1, -1.0);      // -x_{i+1} y_i
  Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  add_sym(A2, i - 1, n + i - 1, 1.0);   // x_i y_i
  add_sym(A2, i, n + i, 1.0);           // x_{i+1} y_{i+1}
  return {QuadraticHamiltonian(s, A1), QuadraticHamiltonian(s, A2)};
}

std::vector<QuadraticHamiltonian> model_family(int k_e, int k_h, int k_f) {
  const int n = k_e + k_h + 2 * k_f;
  std::vector<QuadraticHamiltonian> out;
  for (int i = 1; i <= k_e; ++i) out.push_back(elliptic_block(n, i));
  for (int i = k_e + 1; i <= k_e + k_h; ++i)
    out.push_back(hyperbolic_block(n, i));
  for (int j = 0; j < k_f; ++j) {
    auto [h1, h2] = focus_focus_pair(n, k_e + k_h + 2 * j + 1);
    out.push_back(h1);
    out.push_back(h2);
  }
  return out;
}

Eigen::MatrixXd random_symplectic(int n, double amplitude, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd S(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = i; j < 2 * n; ++j) {
      double v = amplitude * rng.symmetric();
      S(i, j) = v;
      S(j, i) = v;
    }
  Eigen::MatrixXd JS = SymplecticSpace(n).J() * S;
  return JS.exp();
}

// ------------------------------------------------------- normalizing basis

namespace {

// pull a real eigenvector out of a complex one for a real eigenvalue
Eigen::VectorXd realize(const Eigen::VectorXcd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  Eigen::VectorXcd w = v / v(imax);
  return w.real();
}

}  // namespace

Eigen::MatrixXd normalizing_basis(const QuadraticFamily& fam,
                                  const ClassifyOptions& opts) {
  NondegeneracyReport nd = is_nondegenerate(fam, opts);
  if (!nd.ok)
    throw NondegeneracyError("normalizing_basis: family is degenerate: " +
                             nd.failure);
  const int n = fam.space.n;
  const Eigen::MatrixXd J = fam.space.J();

  SplitMix64 rng(opts.seed + 2);
  const int max_attempts = std::max(10, opts.trials);
  std::string last_problem = "no attempt made";

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Eigen::MatrixXd B = 2.0 * J * combine(fam, random_coeffs(n, rng));
    Eigen::EigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success) continue;
    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd vec = es.eigenvectors();
    double scale = lam.cwiseAbs().maxCoeff();

    // need simple, well-separated eigenvalues; otherwise redraw
    double min_gap = 1e300;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      for (Eigen::Index j = i + 1; j < lam.size(); ++j)
        min_gap = std::min(min_gap, std::abs(lam(i) - lam(j)));
    if (min_gap < 1e-4 * scale) {
      last_problem = "eigenvalues too close; redraw";
      continue;
    }

    struct Block {
      int kind;  // 0 elliptic, 1 hyperbolic, 2 focus-focus
      double sort_key;
      std::vector<Eigen::VectorXd> xcols, ycols;
    };
    std::vector<Block> blocks;
    bool failed = false;

    std::vector<bool> used(lam.size(), false);
    auto find_mate = [&](std::complex<double> target) -> Eigen::Index {
      Eigen::Index best = -1;
      double bestd = 1e300;
      for (Eigen::Index j = 0; j < lam.size(); ++j) {
        if (used[j]) continue;
        double d = std::abs(lam(j) - target);
        if (d < bestd) {
          bestd = d;
          best = j;
        }
      }
      if (best < 0 || bestd > 1e-6 * scale) return -1;
      return best;
    };

    for (Eigen::Index i = 0; i < lam.size() && !failed; ++i) {
      if (used[i]) continue;
      EigClass cls = classify_eig(lam(i), opts.eps);
      if (cls == EigClass::Elliptic) {
        if (lam(i).imag() <= 0) continue;  // handle the +i beta member
        used[i] = true;
        Eigen::Index mate = find_mate(std::conj(lam(i)));
        if (mate < 0) { failed = true; break; }
        used[mate] = true;
        Eigen::VectorXd u = vec.col(i).real(), w = vec.col(i).imag();
        double sigma = u.dot(J * w);
        if (std::abs(sigma) < 1e-12) { failed = true; break; }
        Block blk;
        blk.kind = 0;
        blk.sort_key = lam(i).imag();
        if (sigma > 0) {
          blk.xcols = {u / std::sqrt(sigma)};
          blk.ycols = {w / std::sqrt(sigma)};
        } else {
          blk.xcols = {u / std::sqrt(-sigma)};
          blk.ycols = {-w / std::sqrt(-sigma)};
        }
        blocks.push_back(std::move(blk));
      } else if (cls == EigClass::Hyperbolic) {
        if (lam(i).real() <= 0) continue;
        used[i] = true;
        Eigen::Index mate = find_mate(-lam(i));
        if (mate < 0) { failed = true; break; }
        used[mate] = true;
        Eigen::VectorXd u = realize(vec.col(i));
        Eigen::VectorXd v = realize(vec.col(mate));
        double sigma = u.dot(J * v);
        if (std::abs(sigma) < 1e-12) { failed = true; break; }
        Block blk;
        blk.kind = 1;
        blk.sort_key = lam(i).real();
        blk.xcols = {u};
        blk.ycols = {v / sigma};
        blocks.push_back(std::move(blk));
      } else {
        // focus-focus quadruple: take the representative with Re, Im > 0
        if (lam(i).real() <= 0 || lam(i).imag() <= 0) continue;
        used[i] = true;
        Eigen::Index conj_i = find_mate(std::conj(lam(i)));
        Eigen::Index neg_i = find_mate(-lam(i));
        if (conj_i < 0 || neg_i < 0) { failed = true; break; }
        used[conj_i] = true;
        used[neg_i] = true;
        Eigen::Index negc_i = find_mate(-std::conj(lam(i)));
        if (negc_i < 0) { failed = true; break; }
        used[negc_i] = true;

        Eigen::VectorXcd v = vec.col(i);       // eigenvalue a + ib
        Eigen::VectorXcd z = vec.col(neg_i);   // eigenvalue -(a + ib)
        std::complex<double> pairing =
            (v.transpose() * J.cast<std::complex<double>>() * z)(0, 0);
        if (std::abs(pairing) < 1e-12) { failed = true; break; }
        z *= 2.0 / pairing;
        Block blk;
        blk.kind = 2;
        blk.sort_key = lam(i).real();
        blk.xcols = {v.real(), -v.imag()};
        blk.ycols = {z.real(), z.imag()};
        blocks.push_back(std::move(blk));
      }
    }
    if (failed) {
      last_problem = "eigenvector pairing failed; redraw";
      continue;
    }

    std::stable_sort(blocks.begin(), blocks.end(),
                     [](const Block& a, const Block& b) {
                       if (a.kind != b.kind) return a.kind < b.kind;
                       return a.sort_key < b.sort_key;
                     });

    Eigen::MatrixXd S(2 * n, 2 * n);
    int col = 0;
    for (const auto& blk : blocks)
      for (std::size_t c = 0; c < blk.xcols.size(); ++c, ++col) {
        S.col(col) = blk.xcols[c];
        S.col(n + col) = blk.ycols[c];
      }
    if (col != n) {
      last_problem = "block assembly produced wrong column count";
      continue;
    }

    double symp_residual = (S.transpose() * J * S - J).cwiseAbs().maxCoeff();
    if (symp_residual > 100.0 * opts.eps) {
      last_problem = "candidate basis is not symplectic to tolerance";
      continue;
    }

    // model-form residual: every pullback must lie in the model span
    int k_e = 0, k_h = 0, k_f = 0;
    for (const auto& blk : blocks) {
      if (blk.kind == 0) ++k_e;
      else if (blk.kind == 1) ++k_h;
      else ++k_f;
    }
    std::vector<QuadraticHamiltonian> models = model_family(k_e, k_h, k_f);
    const int nm = static_cast<int>(models.size());
    Eigen::MatrixXd G(nm, nm);
    for (int a = 0; a < nm; ++a)
      for (int b = 0; b < nm; ++b)
        G(a, b) = (models[a].A.array() * models[b].A.array()).sum();
    bool ok = true;
    for (const auto& member : fam.members) {
      Eigen::MatrixXd Ap = S.transpose() * member.A * S;
      Eigen::VectorXd rhs(nm);
      for (int a = 0; a < nm; ++a)
        rhs(a) = (Ap.array() * models[a].A.array()).sum();
      Eigen::VectorXd coef = G.ldlt().solve(rhs);
      Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(2 * n, 2 * n);
      for (int a = 0; a < nm; ++a) recon += coef(a) * models[a].A;
      double resid = (Ap - recon).norm() / std::max(1.0, Ap.norm());
      if (resid > 100.0 * opts.eps) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      last_problem = "pullback not in the model span; redraw";
      continue;
    }
    return S;
  }
  throw NumericalDegeneracyError("normalizing_basis: " + last_problem);
}

}  // namespace sympnf::quad
