#include "sympnf/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sympnf/errors.hpp"
#include "sympnf/rng.hpp"

namespace sympnf::cex {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;
using expr::ExprPtr;

// ------------------------------------------------------------- nonresonance

NonresonanceReport check_nonresonance(const VectorXd& gamma, int N,
                                      double threshold) {
  if (N < 1) throw PreconditionError("check_nonresonance: N >= 1 required");
  const int n = static_cast<int>(gamma.size());
  NonresonanceReport rep;
  rep.bound = N;
  rep.threshold = threshold;
  rep.nonresonant = true;
  rep.worst_value = 1e300;
  rep.worst_k = VectorXi::Zero(n);

  VectorXi k = VectorXi::Constant(n, -N);
  for (;;) {
    bool zero = true;
    for (int i = 0; i < n; ++i)
      if (k(i) != 0) zero = false;
    if (!zero) {
      double v = 0.0;
      long l1 = 0;
      for (int i = 0; i < n; ++i) {
        v += k(i) * gamma(i);
        l1 += std::abs(k(i));
      }
      v = std::abs(v);
      long worst_l1 = rep.worst_k.cwiseAbs().sum();
      if (v < rep.worst_value ||
          (v == rep.worst_value && (worst_l1 == 0 || l1 < worst_l1))) {
        rep.worst_value = v;
        rep.worst_k = k;
      }
    }
    int i = n - 1;
    for (; i >= 0; --i) {
      if (++k(i) <= N) break;
      k(i) = -N;
    }
    if (i < 0) break;
  }
  rep.nonresonant = rep.worst_value >= threshold;
  return rep;
}

// ------------------------------------------------------------ plateau spec

void PlateauSpec::validate(const VectorXd& gamma) const {
  const int n = static_cast<int>(gamma.size());
  double prev_center = 1e300, prev_radius = 1e300, prev_dev = 1e300;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const auto& r = regions[k];
    if (r.center.size() != n || static_cast<int>(r.slope.size()) != n)
      throw SpecError("plateau region has wrong dimension");
    if (r.radius <= 0) throw SpecError("plateau radius must be positive");
    for (int i = 0; i < n; ++i) {
      if (r.center(i) - r.radius <= 0)
        throw SpecError("plateau ball leaves the positive orthant");
      if (r.slope[i].second <= 0 || r.slope[i].first <= 0)
        throw SpecError("plateau slopes must be positive rationals");
    }
    for (std::size_t j = 0; j < k; ++j) {
      double dist = (regions[j].center - r.center).norm();
      if (dist <= regions[j].radius + r.radius)
        throw SpecError("plateau balls overlap");
    }
    if (r.center.norm() >= prev_center)
      throw SpecError("plateau centers must shrink monotonically to 0");
    if (r.radius >= prev_radius)
      throw SpecError("plateau radii must shrink monotonically");
    double dev = 0.0;
    for (int i = 0; i < n; ++i)
      dev = std::max(dev, std::abs(static_cast<double>(r.slope[i].first) /
                                       r.slope[i].second -
                                   gamma(i)));
    if (dev > prev_dev)
      throw SpecError("rational slopes must approach gamma monotonically");
    prev_center = r.center.norm();
    prev_radius = r.radius;
    prev_dev = dev;
  }
}

namespace {

// continued-fraction convergents p/q of x (positive), most accurate last
std::vector<std::pair<long long, long long>> convergents(double x, int count) {
  std::vector<std::pair<long long, long long>> out;
  long long p0 = 1, q0 = 0;  // p_{-1}/q_{-1}
  long long p1 = 0, q1 = 1;  // p_{-2}/q_{-2} style seeds
  double frac = x;
  for (int i = 0; i < count; ++i) {
    long long a = static_cast<long long>(std::floor(frac));
    long long p = a * p0 + p1;
    long long q = a * q0 + q1;
    out.emplace_back(p, q);
    p1 = p0;
    q1 = q0;
    p0 = p;
    q0 = q;
    double rem = frac - static_cast<double>(a);
    if (rem < 1e-12) break;  // x is (numerically) rational: stop exact
    frac = 1.0 / rem;
  }
  return out;
}

ExprPtr fold_add(const std::vector<ExprPtr>& terms) {
  if (terms.empty()) return expr::constant(0.0);
  ExprPtr acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = expr::add(acc, terms[i]);
  return acc;
}

ExprPtr ivar(int i) { return expr::var("I" + std::to_string(i)); }

// one-sided flat bump: exactly 0 for u <= 0, flat at the cut
ExprPtr flat_positive(const ExprPtr& u) {
  return expr::piecewise(u, expr::Cmp::GT, expr::constant(0.0),
                         expr::flat_exp(u), expr::constant(0.0),
                         /*flat_glued=*/true);
}

// smooth step: exactly 0 for u <= 0 and exactly 1 for u >= 1
ExprPtr smooth_step(const ExprPtr& u) {
  ExprPtr f = flat_positive(u);
  ExprPtr g = flat_positive(expr::sub(expr::constant(1.0), u));
  return expr::div(f, expr::add(f, g));
}

// step argument for a ball: positive inside radius, reaching 1 at radius/2
ExprPtr ball_step_arg(const VectorXd& center, double radius) {
  std::vector<ExprPtr> sq;
  for (int i = 0; i < center.size(); ++i)
    sq.push_back(
        expr::pow(expr::sub(ivar(i + 1), expr::constant(center(i))), 2));
  ExprPtr rho2 = fold_add(sq);
  double r2 = radius * radius;
  double inner2 = (radius / 2.0) * (radius / 2.0);
  return expr::div(expr::sub(expr::constant(r2), rho2),
                   expr::constant(r2 - inner2));
}

// a payload supported in the ball, wrapped so evaluation outside the ball
// short-circuits through the guard
ExprPtr ball_localized(const ExprPtr& uarg, const ExprPtr& payload) {
  return expr::piecewise(uarg, expr::Cmp::GT, expr::constant(0.0),
                         expr::mul(smooth_step(uarg), payload),
                         expr::constant(0.0), /*flat_glued=*/true);
}

}  // namespace

PlateauSpec desk_spec(const VectorXd& gamma, int K) {
  const int n = static_cast<int>(gamma.size());
  PlateauSpec spec;
  std::vector<std::vector<std::pair<long long, long long>>> convs;
  for (int i = 0; i < n; ++i) convs.push_back(convergents(gamma(i), K + 3));
  for (int k = 1; k <= K; ++k) {
    PlateauRegion r;
    r.center = VectorXd::Constant(n, 0.5 / k);
    r.radius = 0.02 / (k * k * k);
    for (int i = 0; i < n; ++i) {
      const auto& cv = convs[i];
      std::size_t idx = std::min<std::size_t>(k + 1, cv.size() - 1);
      r.slope.push_back(cv[idx]);
    }
    spec.regions.push_back(std::move(r));
  }
  spec.validate(gamma);
  return spec;
}

ExprPtr build_plateau_Q(const PlateauSpec& spec, const VectorXd& gamma) {
  spec.validate(gamma);
  const int n = static_cast<int>(gamma.size());
  std::vector<ExprPtr> terms;
  for (int i = 0; i < n; ++i)
    terms.push_back(expr::mul(expr::constant(gamma(i)), ivar(i + 1)));
  for (const auto& region : spec.regions) {
    // d_k keeps the plateau level glued to the background at the center
    double dk = 0.0;
    std::vector<ExprPtr> lin;
    for (int i = 0; i < n; ++i) {
      double gki = static_cast<double>(region.slope[i].first) /
                   region.slope[i].second;
      dk += (gamma(i) - gki) * region.center(i);
      lin.push_back(expr::mul(expr::constant(gki - gamma(i)), ivar(i + 1)));
    }
    lin.push_back(expr::constant(dk));
    terms.push_back(ball_localized(ball_step_arg(region.center, region.radius),
                                   fold_add(lin)));
  }
  return fold_add(terms);
}

// ----------------------------------------------------------------- build H2

namespace {

// Re((x_j + i y_j)^a (x_l - i y_l)^b) expanded into monomials
ExprPtr resonant_cos_term(int a, int b, int j, int l) {
  auto xv = [](int i) { return expr::var("x" + std::to_string(i)); };
  auto yv = [](int i) { return expr::var("y" + std::to_string(i)); };
  // binomial table
  auto binom = [](int nn, int kk) {
    double r = 1.0;
    for (int t = 1; t <= kk; ++t)
      r = r * (nn - kk + t) / t;
    return r;
  };
  std::vector<ExprPtr> terms;
  for (int k = 0; k <= a; ++k) {
    for (int m = 0; m <= b; ++m) {
      int phase = ((k - m) % 4 + 4) % 4;  // Re(i^k (-i)^m) pattern
      if (phase == 1 || phase == 3) continue;
      double sign = phase == 0 ? 1.0 : -1.0;
      double coeff = sign * binom(a, k) * binom(b, m);
      ExprPtr term = expr::constant(std::abs(coeff));
      if (coeff < 0) term = expr::neg(term);
      if (a - k > 0) term = expr::mul(term, expr::pow(xv(j), a - k));
      if (k > 0) term = expr::mul(term, expr::pow(yv(j), k));
      if (b - m > 0) term = expr::mul(term, expr::pow(xv(l), b - m));
      if (m > 0) term = expr::mul(term, expr::pow(yv(l), m));
      terms.push_back(term);
    }
  }
  return fold_add(terms);
}

ExprPtr action_var_expr(int i) {
  // I_i = x_i^2 + y_i^2
  return expr::add(expr::pow(expr::var("x" + std::to_string(i)), 2),
                   expr::pow(expr::var("y" + std::to_string(i)), 2));
}

std::map<std::string, ExprPtr> action_bindings(int n) {
  std::map<std::string, ExprPtr> binds;
  for (int i = 1; i <= n; ++i)
    binds["I" + std::to_string(i)] = action_var_expr(i);
  return binds;
}

}  // namespace

PerturbedSystem build_H2(const PlateauSpec& spec, const VectorXd& gamma,
                         const std::vector<double>& epsilons,
                         const BuildOptions& opts) {
  const int n = static_cast<int>(gamma.size());
  if (n != 2)
    throw SpecError("build_H2: resonant perturbations are desk-scale n = 2");
  if (epsilons.size() != spec.regions.size())
    throw ArityError("build_H2: one epsilon per region");

  PerturbedSystem sys;
  sys.n = n;
  sys.gamma = gamma;
  sys.spec = spec;
  sys.Q = build_plateau_Q(spec, gamma);
  auto binds = action_bindings(n);
  sys.H1 = expr::substitute(sys.Q, binds);

  ExprPtr H2 = sys.H1;
  for (std::size_t k = 0; k < spec.regions.size(); ++k) {
    const auto& region = spec.regions[k];
    RegionData data;
    data.epsilon = epsilons[k];
    data.mu = opts.mu;
    data.j = 1;
    data.l = 2;
    // resonance integers a gamma_1 = b gamma_2 for gamma_i = p_i / q_i
    long long p1 = region.slope[0].first, q1 = region.slope[0].second;
    long long p2 = region.slope[1].first, q2 = region.slope[1].second;
    long long anum = p2 * q1, bnum = p1 * q2;
    long long g = std::gcd(anum, bnum);
    anum /= g;
    bnum /= g;
    if (anum + bnum > opts.max_order)
      throw SpecError(
          "build_H2: no small-integer resonance for the region slope "
          "(order " +
          std::to_string(anum + bnum) + " exceeds the bound)");
    data.a = static_cast<int>(anum);
    data.b = static_cast<int>(bnum);
    data.f0 = std::pow(region.center(0), data.a / 2.0) *
              std::pow(region.center(1), data.b / 2.0);
    data.support_radius = region.radius / 2.0;

    // bump supported in |I - c| <= r/2, identically 1 inside r/4
    ExprPtr uarg = expr::substitute(
        ball_step_arg(region.center, data.support_radius), binds);
    data.bump = smooth_step(uarg);
    data.cos_term = resonant_cos_term(data.a, data.b, data.j, data.l);
    // witness: the resonant action b I_j + a I_l
    data.witness = expr::add(
        expr::mul(expr::constant(static_cast<double>(data.b)),
                  action_var_expr(data.j)),
        expr::mul(expr::constant(static_cast<double>(data.a)),
                  action_var_expr(data.l)));
    // detuning along the transverse direction (b, -a), normalized so the
    // core spans O(1); this sets the pendulum mass and hence the saddle
    // exponent of the reduced system
    double ba_norm = std::hypot(static_cast<double>(data.a),
                                static_cast<double>(data.b));
    ExprPtr detune_I = expr::div(
        expr::sub(
            expr::mul(expr::constant(static_cast<double>(data.b)),
                      expr::sub(ivar(1), expr::constant(region.center(0)))),
            expr::mul(expr::constant(static_cast<double>(data.a)),
                      expr::sub(ivar(2), expr::constant(region.center(1))))),
        expr::constant(data.support_radius * ba_norm));
    ExprPtr detune = expr::substitute(detune_I, binds);
    ExprPtr payload = expr::add(
        expr::mul(expr::constant(data.mu * data.f0), expr::pow(detune, 2)),
        data.cos_term);
    data.perturbation = expr::piecewise(
        uarg, expr::Cmp::GT, expr::constant(0.0),
        expr::mul(expr::constant(data.epsilon),
                  expr::mul(data.bump, payload)),
        expr::constant(0.0), /*flat_glued=*/true);
    H2 = expr::add(H2, data.perturbation);
    sys.regions.push_back(std::move(data));
  }
  sys.H2 = H2;
  return sys;
}

MatrixXd quadratic_part_at_zero(const ExprPtr& e, const VarLayout& layout) {
  expr::Compiled c(e, layout);
  VectorXd zero = VectorXd::Zero(layout.dim());
  return c.hdual(zero).h / 2.0;
}

double outside_support_residual(const PerturbedSystem& sys, int samples) {
  expr::Compiled h1(sys.H1, sys.layout());
  expr::Compiled h2(sys.H2, sys.layout());
  // I-space sample box covering the regions and beyond
  std::vector<double> lo{1e-3, 1e-3}, hi{0.7, 0.7};
  auto pts = halton_box(static_cast<std::size_t>(samples) * 4, lo, hi);
  double worst = 0.0;
  int used = 0;
  for (const auto& p : pts) {
    if (used >= samples) break;
    VectorXd I = Eigen::Map<const VectorXd>(p.data(), 2);
    bool inside = false;
    for (const auto& r : sys.spec.regions)
      if ((I - r.center).norm() <= r.radius) inside = true;
    if (inside) continue;
    ++used;
    // a representative phase point over this I (angles fixed)
    VectorXd z(4);
    z << std::sqrt(I(0)) * 0.6, std::sqrt(I(1)),
        std::sqrt(I(0)) * 0.8, 0.0;
    worst = std::max(worst, std::abs(h2.value(z) - h1.value(z)));
  }
  return worst;
}

bool support_is_inside_regions(const PerturbedSystem& sys) {
  // (a) H2 is literally H1 plus the stored perturbation terms
  ExprPtr recon = sys.H1;
  for (const auto& r : sys.regions) recon = expr::add(recon, r.perturbation);
  if (!expr::structurally_equal(recon, sys.H2)) return false;

  // (b) each bump vanishes exactly on and slightly inside its support
  // sphere, and equals exactly 1 at the center
  for (std::size_t k = 0; k < sys.regions.size(); ++k) {
    const auto& region = sys.spec.regions[k];
    const auto& data = sys.regions[k];
    expr::Compiled bump(data.bump, sys.layout());
    auto at_I = [&](const VectorXd& I) {
      VectorXd z(4);
      z << std::sqrt(I(0)), std::sqrt(I(1)), 0.0, 0.0;
      return bump.value(z);
    };
    if (at_I(region.center) != 1.0) return false;
    for (int dir = 0; dir < 8; ++dir) {
      double ang = 2.0 * M_PI * dir / 8.0;
      VectorXd offset(2);
      offset << std::cos(ang), std::sin(ang);
      VectorXd I_on = region.center + data.support_radius * 0.999 * offset;
      VectorXd I_out = region.center + data.support_radius * 1.05 * offset;
      if (at_I(I_on) != 0.0 && std::abs(at_I(I_on)) > 1e-280) {
        // on the sphere the flat factor may underflow to a subnormal; treat
        // anything above underflow scale as a support violation
        return false;
      }
      if (at_I(I_out) != 0.0) return false;
    }
  }
  return true;
}

// ------------------------------------------------------ hyperbolic detection

namespace {

double region_period(const PerturbedSystem& sys, int k) {
  const auto& region = sys.spec.regions[static_cast<std::size_t>(k - 1)];
  long long s = 1;
  for (const auto& [p, q] : region.slope) s = std::lcm(s, q);
  return M_PI * static_cast<double>(s);
}

VectorXd region_seed(const PerturbedSystem& sys, int k) {
  const auto& region = sys.spec.regions[static_cast<std::size_t>(k - 1)];
  VectorXd z(4);
  z << std::sqrt(region.center(0)), std::sqrt(region.center(1)), 0.0, 0.0;
  return z;
}

}  // namespace

PendulumOracle pendulum_oracle(const PerturbedSystem& sys, int k) {
  // reduced pendulum at the resonance: H_red = eps (mu f0 D(J)^2 + f(J) cos
  // psi) with {psi, J} = 1, D = -4ab (J - J_c) / (support ||(b,-a)||), so the
  // saddle exponent is nu = sqrt(-H_psi_psi H_JJ)
  const auto& data = sys.regions[static_cast<std::size_t>(k - 1)];
  PendulumOracle o;
  double ba_norm = std::hypot(static_cast<double>(data.a),
                              static_cast<double>(data.b));
  double kappa = 4.0 * data.a * data.b / (data.support_radius * ba_norm);
  o.nu = data.epsilon * data.f0 * std::sqrt(2.0 * data.mu) * kappa;
  o.period = region_period(sys, k);
  o.lambda = std::exp(o.nu * o.period);
  return o;
}

FloquetReport detect_hyperbolic_orbit(const PerturbedSystem& sys, int k,
                                      const DetectOptions& opts) {
  FloquetReport rep;
  if (k < 1 || k > static_cast<int>(sys.regions.size()))
    throw ArityError("detect_hyperbolic_orbit: region index out of range");

  auto field = std::make_shared<flows::HamiltonianField>(sys.H2, sys.layout());
  expr::Compiled h2(sys.H2, sys.layout());
  flows::FlowOptions fo;
  fo.tol = opts.integrator_tol;

  VectorXd z = region_seed(sys, k);
  double T = region_period(sys, k);
  const double E_star = h2.value(z);

  auto shoot = [&](const VectorXd& zz, double TT) {
    return flows::flow(*field, TT, zz, fo);
  };

  double residual = 1e300;
  int iter = 0;
  for (; iter < opts.max_newton; ++iter) {
    VectorXd img = shoot(z, T);
    VectorXd F(6);
    F.head(4) = img - z;
    F(4) = z(2);                    // phase anchor y_1 = 0
    F(5) = h2.value(z) - E_star;    // energy section
    residual = F.cwiseAbs().maxCoeff();
    if (residual < opts.newton_tol) break;

    auto [end, D] = flows::flow_with_jacobian(*field, T, z, fo);
    MatrixXd Jm(6, 5);
    Jm.setZero();
    Jm.block(0, 0, 4, 4) = D - MatrixXd::Identity(4, 4);
    Jm.block(0, 4, 4, 1) = field->value(end);
    Jm(4, 2) = 1.0;
    Jm.block(5, 0, 1, 4) = h2.dual(z).g.transpose();
    VectorXd step = Jm.colPivHouseholderQr().solve(F);
    double clamp = std::max(1.0, step.cwiseAbs().maxCoeff() / 0.02);
    z -= step.head(4) / clamp;
    T -= step(4) / clamp;
    if (!std::isfinite(z.cwiseAbs().maxCoeff()) || T <= 0) {
      rep.diagnostics = "newton diverged from the pendulum seed";
      return rep;
    }
  }
  if (residual >= opts.newton_tol * 100.0) {
    rep.diagnostics = "newton stalled at residual " + std::to_string(residual) +
                      " after " + std::to_string(iter) + " iterations";
    return rep;
  }

  rep.found = true;
  rep.orbit_point = z;
  rep.period = T;
  rep.orbit_residual = residual;

  auto [end, M] = flows::flow_with_jacobian(*field, T, z, fo);
  (void)end;
  Eigen::EigenSolver<MatrixXd> es(M);
  for (int i = 0; i < 4; ++i) rep.multipliers.push_back(es.eigenvalues()(i));
  rep.multiplier_product = M.determinant();
  rep.lambda_max = 0.0;
  for (const auto& lam : rep.multipliers) {
    if (std::abs(lam.imag()) < 1e-6 * std::abs(lam))
      rep.lambda_max = std::max(rep.lambda_max, std::abs(lam.real()));
  }
  rep.hyperbolic = rep.lambda_max > 1.0 + opts.tol;
  return rep;
}

// --------------------------------------------------------------- witnesses

double bracket_residual_at(const ExprPtr& hamiltonian, const ExprPtr& witness,
                           const VarLayout& layout,
                           const std::vector<VectorXd>& points) {
  expr::Compiled h(hamiltonian, layout);
  expr::Compiled w(witness, layout);
  const MatrixXd J = layout.J();
  double worst = 0.0;
  for (const auto& z : points) {
    double r = std::abs(h.dual(z).g.dot(J * w.dual(z).g));
    worst = std::max(worst, r);
  }
  return worst;
}

std::vector<VectorXd> region_probes(const PerturbedSystem& sys, int k,
                                    int count, double radius_fraction) {
  const auto& region = sys.spec.regions[static_cast<std::size_t>(k - 1)];
  std::vector<double> lo{-1.0, -1.0, 0.0, 0.0}, hi{1.0, 1.0, 1.0, 1.0};
  auto raw = halton_box(static_cast<std::size_t>(count), lo, hi);
  std::vector<VectorXd> out;
  for (const auto& r : raw) {
    VectorXd I = region.center;
    double rad = region.radius * radius_fraction;
    I(0) += rad * r[0] / std::sqrt(2.0);
    I(1) += rad * r[1] / std::sqrt(2.0);
    double th1 = 2.0 * M_PI * r[2], th2 = 2.0 * M_PI * r[3];
    VectorXd z(4);
    z << std::sqrt(I(0)) * std::cos(th1), std::sqrt(I(1)) * std::cos(th2),
        std::sqrt(I(0)) * std::sin(th1), std::sqrt(I(1)) * std::sin(th2);
    out.push_back(z);
  }
  return out;
}

double verify_integrability_witness(const PerturbedSystem& sys, int k,
                                    int probe_count) {
  const auto& data = sys.regions[static_cast<std::size_t>(k - 1)];
  auto probes = region_probes(sys, k, probe_count, 0.8);
  return bracket_residual_at(sys.H2, data.witness, sys.layout(), probes);
}

std::vector<VectorXd> poincare_scatter(const PerturbedSystem& sys, int k,
                                       int trajectories,
                                       int crossings_per_trajectory) {
  auto field = std::make_shared<flows::HamiltonianField>(sys.H2, sys.layout());
  flows::FlowOptions fo;
  fo.tol = 1e-10;
  std::vector<VectorXd> rows;
  VectorXd seed = region_seed(sys, k);
  const auto& region = sys.spec.regions[static_cast<std::size_t>(k - 1)];

  for (int traj = 0; traj < trajectories; ++traj) {
    VectorXd z = seed;
    // spread starting actions across the region core
    double off = region.radius * 0.2 * (traj - trajectories / 2) /
                 std::max(1, trajectories);
    z(0) = std::sqrt(region.center(0) + off);
    int found = 0;
    double prev_y1 = z(2), prev_t = 0.0;
    VectorXd prev = z;
    flows::integrate_steps(
        [&field](const VectorXd& y, VectorXd& dy) { dy = field->value(y); },
        0.0, 4000.0 * region_period(sys, k), z, fo,
        [&](double t, const VectorXd& y) {
          if (prev_y1 > 0.0 && y(2) <= 0.0) {
            // bisection refinement of the crossing
            double lo_t = 0.0, hi_t = t - prev_t;
            VectorXd base = prev;
            for (int it = 0; it < 40; ++it) {
              double mid = 0.5 * (lo_t + hi_t);
              VectorXd ym = flows::flow(*field, mid, base, fo);
              if (ym(2) > 0.0)
                lo_t = mid;
              else
                hi_t = mid;
            }
            VectorXd yc = flows::flow(*field, 0.5 * (lo_t + hi_t), base, fo);
            VectorXd row(4);
            row << prev_t + 0.5 * (lo_t + hi_t), yc(0), yc(1), yc(3);
            rows.push_back(row);
            ++found;
          }
          prev_y1 = y(2);
          prev_t = t;
          prev = y;
          return found < crossings_per_trajectory;
        });
  }
  return rows;
}

}  // namespace sympnf::cex
