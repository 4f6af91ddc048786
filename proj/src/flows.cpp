#include "sympnf/flows.hpp"

#include <algorithm>
#include <cmath>

#include "sympnf/errors.hpp"
#include "sympnf/rng.hpp"

namespace sympnf::flows {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ------------------------------------------------------------------ fields

HamiltonianField::HamiltonianField(expr::ExprPtr hamiltonian,
                                   const VarLayout& layout)
    : source_(std::move(hamiltonian)),
      layout_(layout),
      compiled_(source_, layout),
      J_(layout.J()) {}

VectorXd HamiltonianField::value(const VectorXd& z) const {
  return J_ * compiled_.dual(z).g;
}

MatrixXd HamiltonianField::jacobian(const VectorXd& z) const {
  return J_ * compiled_.hdual(z).h;
}

SumField::SumField(std::vector<FieldPtr> parts, std::vector<double> weights)
    : parts_(std::move(parts)), weights_(std::move(weights)) {
  if (parts_.empty() || parts_.size() != weights_.size())
    throw ArityError("SumField: need matching nonempty parts and weights");
  for (const auto& p : parts_)
    if (p->dim() != parts_[0]->dim())
      throw DimensionError("SumField: parts live on different spaces");
}

int SumField::dim() const { return parts_[0]->dim(); }

VectorXd SumField::value(const VectorXd& z) const {
  VectorXd v = VectorXd::Zero(dim());
  for (std::size_t i = 0; i < parts_.size(); ++i)
    v += weights_[i] * parts_[i]->value(z);
  return v;
}

MatrixXd SumField::jacobian(const VectorXd& z) const {
  MatrixXd m = MatrixXd::Zero(dim(), dim());
  for (std::size_t i = 0; i < parts_.size(); ++i)
    m += weights_[i] * parts_[i]->jacobian(z);
  return m;
}

// ------------------------------------------------------------ sampled field

SampledField::SampledField(Box box, std::vector<int> resolution,
                           std::vector<VectorXd> node_values)
    : box_(std::move(box)),
      res_(std::move(resolution)),
      data_(std::move(node_values)) {
  std::size_t total = 1;
  for (int r : res_) {
    if (r < 4) throw SpecError("SampledField: need at least 4 nodes per axis");
    total *= static_cast<std::size_t>(r);
  }
  if (data_.size() != total)
    throw DimensionError("SampledField: node count does not match resolution");
}

std::vector<VectorXd> SampledField::lattice(const Box& box,
                                            const std::vector<int>& res) {
  const int d = static_cast<int>(res.size());
  std::size_t total = 1;
  for (int r : res) total *= static_cast<std::size_t>(r);
  std::vector<VectorXd> nodes;
  nodes.reserve(total);
  std::vector<int> idx(d, 0);
  for (std::size_t k = 0; k < total; ++k) {
    VectorXd w(d);
    for (int a = 0; a < d; ++a)
      w(a) = box.lo(a) +
             (box.hi(a) - box.lo(a)) * idx[a] / static_cast<double>(res[a] - 1);
    nodes.push_back(std::move(w));
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < res[a]) break;
      idx[a] = 0;
    }
  }
  return nodes;
}

namespace {

// 4-point cubic Lagrange weights (taps at -1, 0, 1, 2) and s-derivatives;
// exact on cubic polynomials, which keeps the interpolation error far below
// the time-quadrature error of path_to_field
void cr_weights(double s, double* w, double* dw) {
  w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
  w[1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  w[2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
  w[3] = (s + 1.0) * s * (s - 1.0) / 6.0;
  double s2 = s * s;
  dw[0] = -(3.0 * s2 - 6.0 * s + 2.0) / 6.0;
  dw[1] = (3.0 * s2 - 4.0 * s - 1.0) / 2.0;
  dw[2] = -(3.0 * s2 - 2.0 * s - 2.0) / 2.0;
  dw[3] = (3.0 * s2 - 1.0) / 6.0;
}

// shared by value() and jacobian()
VectorXd interpolate(const SampledField& f, const VectorXd& z, MatrixXd* grad) {
  const auto& res = f.resolution();
  const Box& box = f.box();
  const int d = f.dim();
  if (z.size() != d)
    throw DimensionError("sampled field: point of wrong dimension");

  std::vector<int> base(d);
  std::vector<double> w(4 * d), dw(4 * d);
  for (int a = 0; a < d; ++a) {
    double h = (box.hi(a) - box.lo(a)) / (res[a] - 1);
    double u = (z(a) - box.lo(a)) / h;
    if (u < -1e-9 || u > res[a] - 1 + 1e-9)
      throw Error("sampled field evaluated outside its grid");
    int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, res[a] - 2);
    double w4[4], dw4[4];
    cr_weights(u - i0, w4, dw4);
    base[a] = i0 - 1;
    for (int t = 0; t < 4; ++t) {
      w[4 * a + t] = w4[t];
      dw[4 * a + t] = dw4[t] / h;
    }
  }

  VectorXd val = VectorXd::Zero(d);
  if (grad) grad->setZero();
  const auto& data = f.node_data();

  std::vector<int> tap(d, 0);
  for (;;) {
    double weight = 1.0;
    std::size_t index = 0;
    for (int a = 0; a < d; ++a) {
      int node = std::clamp(base[a] + tap[a], 0, res[a] - 1);
      index = index * static_cast<std::size_t>(res[a]) +
              static_cast<std::size_t>(node);
      weight *= w[4 * a + tap[a]];
    }
    const VectorXd& nv = data[index];
    val += weight * nv;
    if (grad) {
      for (int g = 0; g < d; ++g) {
        double wg = 1.0;
        for (int a = 0; a < d; ++a)
          wg *= (a == g) ? dw[4 * a + tap[a]] : w[4 * a + tap[a]];
        grad->col(g) += wg * nv;
      }
    }
    int a = d - 1;
    for (; a >= 0; --a) {
      if (++tap[a] < 4) break;
      tap[a] = 0;
    }
    if (a < 0) break;
  }
  return val;
}

}  // namespace

VectorXd SampledField::value(const VectorXd& z) const {
  return interpolate(*this, z, nullptr);
}

MatrixXd SampledField::jacobian(const VectorXd& z) const {
  MatrixXd g(dim(), dim());
  interpolate(*this, z, &g);
  return g;
}

// -------------------------------------------------------- fiber-sampled field

FiberSampledField::FiberSampledField(expr::ExprPtr fibration,
                                     const VarLayout& layout,
                                     FiberBranchMode mode, double c_lo,
                                     double c_hi, std::vector<Branch> branches)
    : source_(std::move(fibration)),
      h_(source_, layout),
      J_(layout.J()),
      mode_(mode),
      c_lo_(c_lo),
      c_hi_(c_hi),
      branches_(std::move(branches)) {
  if (layout.dim() != 2)
    throw DimensionError("FiberSampledField: chart must have dimension 2");
  if (branches_.empty() || c_hi_ <= c_lo_)
    throw SpecError("FiberSampledField: need branches and a proper band");
  for (const auto& b : branches_)
    if (b.betas.size() < 4)
      throw SpecError("FiberSampledField: need at least 4 profile nodes");
}

const FiberSampledField::Branch& FiberSampledField::branch_at(
    const Eigen::VectorXd& z) const {
  if (mode_ == FiberBranchMode::Single) return branches_[0];
  int sx = z(0) >= 0 ? 1 : -1;
  int sy = z(1) >= 0 ? 1 : -1;
  for (const auto& b : branches_)
    if (b.sign_x == sx && b.sign_y == sy) return b;
  throw Error("fiber field evaluated on an unsampled quadrant branch");
}

std::pair<double, double> FiberSampledField::beta_at(const Branch& b,
                                                     double c) const {
  const int n = static_cast<int>(b.betas.size());
  double h = (c_hi_ - c_lo_) / (n - 1);
  double u = (c - c_lo_) / h;
  if (u < -1e-9 || u > n - 1 + 1e-9)
    throw Error("fiber field evaluated outside its fiber-value band");
  int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
  double w[4], dw[4];
  cr_weights(u - i0, w, dw);
  double beta = 0.0, dbeta = 0.0;
  for (int t = 0; t < 4; ++t) {
    int node = std::clamp(i0 - 1 + t, 0, n - 1);
    beta += w[t] * b.betas[node];
    dbeta += dw[t] / h * b.betas[node];
  }
  return {beta, dbeta};
}

VectorXd FiberSampledField::value(const VectorXd& z) const {
  auto [beta, dbeta] = beta_at(branch_at(z), h_.value(z));
  (void)dbeta;
  return beta * (J_ * h_.dual(z).g);
}

MatrixXd FiberSampledField::jacobian(const VectorXd& z) const {
  HDual hd = h_.hdual(z);
  auto [beta, dbeta] = beta_at(branch_at(z), hd.v);
  Eigen::VectorXd grad = hd.g;
  Eigen::VectorXd v = J_ * grad;  // X_h
  return v * (dbeta * grad.transpose()) + beta * (J_ * hd.h);
}

// --------------------------------------------------------------- moment map

MomentMap::MomentMap(std::vector<expr::ExprPtr> components,
                     const VarLayout& layout)
    : sources_(std::move(components)), layout_(layout) {
  for (const auto& e : sources_) comps_.emplace_back(e, layout_);
}

VectorXd MomentMap::eval(const VectorXd& z) const {
  VectorXd out(size());
  for (int j = 0; j < size(); ++j) out(j) = comps_[j].value(z);
  return out;
}

VectorXd MomentMap::gradient(int j, const VectorXd& z) const {
  return comps_[j].dual(z).g;
}

double bracket_residual(const HamiltonianField& field, const MomentMap& moment,
                        const std::vector<VectorXd>& probes) {
  const MatrixXd J = field.layout().J();
  double worst = 0.0;
  for (const auto& z : probes) {
    VectorXd Xh = field.value(z);  // already J grad H
    for (int j = 0; j < moment.size(); ++j) {
      // {H, F} = (grad H)^T J grad F = -X_H . grad F ... with our sign,
      // {F, H} = grad F . X_H; either way the magnitude is what matters
      double r = std::abs(moment.gradient(j, z).dot(Xh));
      worst = std::max(worst, r);
    }
  }
  return worst;
}

// ------------------------------------------------------------- integration

namespace {

// Dormand-Prince 5(4) tableau
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                 A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
// difference between 5th and embedded 4th order weights
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

}  // namespace

void integrate_steps(
    const std::function<void(const VectorXd&, VectorXd&)>& rhs, double t0,
    double t1, const VectorXd& y0, const FlowOptions& opts,
    const std::function<bool(double, const VectorXd&)>& on_step) {
  if (t1 == t0) return;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double t = t0;
  VectorXd y = y0;
  const Eigen::Index n = y.size();
  VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);

  rhs(y, k1);
  double h = dir * std::min(opts.initial_step, span);
  std::size_t steps = 0;

  while (dir * (t1 - t) > 0.0) {
    if (++steps > opts.max_steps)
      throw StiffnessError("integrator exceeded the step budget");
    if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t)))
      throw StiffnessError("integrator step size underflow");
    if (dir * (t + h - t1) > 0.0) h = t1 - t;

    ytmp = y + h * (A21 * k1);
    rhs(ytmp, k2);
    ytmp = y + h * (A31 * k1 + A32 * k2);
    rhs(ytmp, k3);
    ytmp = y + h * (A41 * k1 + A42 * k2 + A43 * k3);
    rhs(ytmp, k4);
    ytmp = y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4);
    rhs(ytmp, k5);
    ytmp = y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5);
    rhs(ytmp, k6);
    ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    rhs(ynew, k7);

    VectorXd err =
        h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    double norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double sc =
          opts.tol + opts.tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      norm = std::max(norm, std::abs(err(i)) / sc);
    }

    if (norm <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      if (opts.domain && !opts.domain->contains(y))
        throw DomainEscapeError("trajectory left the declared domain", t);
      if (!on_step(t, y)) return;
    } else {
      rhs(y, k1);  // k1 must match y when the step is rejected
    }
    double factor = 0.9 * std::pow(std::max(norm, 1e-10), -0.2);
    h *= std::clamp(factor, 0.2, 5.0);
  }
}

VectorXd flow(const Field& field, double t, const VectorXd& pt,
              const FlowOptions& opts) {
  if (pt.size() != field.dim())
    throw DimensionError("flow: point dimension does not match the field");
  if (t == 0.0) return pt;
  VectorXd out = pt;
  auto rhs = [&field](const VectorXd& y, VectorXd& dy) { dy = field.value(y); };
  integrate_steps(rhs, 0.0, t, pt, opts, [&out](double, const VectorXd& y) {
    out = y;
    return true;
  });
  return out;
}

std::pair<VectorXd, MatrixXd> flow_with_jacobian(const Field& field, double t,
                                                 const VectorXd& pt,
                                                 const FlowOptions& opts) {
  const int n = field.dim();
  if (pt.size() != n)
    throw DimensionError("flow: point dimension does not match the field");
  VectorXd y0(n + n * n);
  y0.head(n) = pt;
  MatrixXd id = MatrixXd::Identity(n, n);
  y0.tail(n * n) = Eigen::Map<const VectorXd>(id.data(), n * n);
  if (t == 0.0) return {pt, id};

  auto rhs = [&field, n](const VectorXd& y, VectorXd& dy) {
    dy.resize(n + n * n);
    VectorXd z = y.head(n);
    dy.head(n) = field.value(z);
    MatrixXd D = field.jacobian(z);
    Eigen::Map<const MatrixXd> delta(y.tail(n * n).data(), n, n);
    MatrixXd dd = D * delta;
    dy.tail(n * n) = Eigen::Map<const VectorXd>(dd.data(), n * n);
  };
  VectorXd out = y0;
  // escape detection applies to the base point only
  FlowOptions inner = opts;
  inner.domain.reset();
  integrate_steps(rhs, 0.0, t, y0, inner,
                  [&out, &opts, n](double tt, const VectorXd& y) {
                    if (opts.domain && !opts.domain->contains(y.head(n)))
                      throw DomainEscapeError(
                          "trajectory left the declared domain", tt);
                    out = y;
                    return true;
                  });
  MatrixXd Jac = Eigen::Map<const MatrixXd>(out.tail(n * n).data(), n, n);
  return {out.head(n), Jac};
}

// ------------------------------------------------------------- numeric maps

NumericMap::NumericMap(VarLayout layout, std::vector<Primitive> pipeline)
    : layout_(std::move(layout)), pipeline_(std::move(pipeline)) {
  for (const auto& p : pipeline_) {
    if (const auto* aff = std::get_if<AffinePrimitive>(&p)) {
      if (aff->A.rows() != layout_.dim() || aff->A.cols() != layout_.dim() ||
          aff->b.size() != layout_.dim())
        throw DimensionError("NumericMap: affine primitive of wrong size");
    } else {
      const auto& fl = std::get<FlowPrimitive>(p);
      if (fl.field->dim() != layout_.dim())
        throw DimensionError("NumericMap: flow primitive of wrong dimension");
    }
  }
}

NumericMap NumericMap::identity(const VarLayout& layout) {
  return NumericMap(layout, {});
}

NumericMap NumericMap::linear(const VarLayout& layout, const MatrixXd& A,
                              const VectorXd& b) {
  return NumericMap(layout, {AffinePrimitive{A, b}});
}

NumericMap NumericMap::linear(const VarLayout& layout, const MatrixXd& A) {
  return linear(layout, A, VectorXd::Zero(layout.dim()));
}

NumericMap NumericMap::flow_step(const VarLayout& layout, FieldPtr field,
                                 double time, double tol) {
  return NumericMap(layout, {FlowPrimitive{std::move(field), time, tol}});
}

NumericMap NumericMap::compose(const NumericMap& f, const NumericMap& g) {
  if (!(f.layout_ == g.layout_))
    throw DimensionError("NumericMap::compose: layouts differ");
  std::vector<Primitive> pipe = g.pipeline_;
  pipe.insert(pipe.end(), f.pipeline_.begin(), f.pipeline_.end());
  return NumericMap(f.layout_, std::move(pipe));
}

VectorXd NumericMap::apply(const VectorXd& z) const {
  VectorXd cur = z;
  for (const auto& p : pipeline_) {
    if (const auto* aff = std::get_if<AffinePrimitive>(&p)) {
      cur = aff->A * cur + aff->b;
    } else {
      const auto& fl = std::get<FlowPrimitive>(p);
      FlowOptions o;
      o.tol = fl.tol;
      cur = flow(*fl.field, fl.time, cur, o);
    }
  }
  return cur;
}

MatrixXd NumericMap::jacobian(const VectorXd& z) const {
  VectorXd cur = z;
  MatrixXd D = MatrixXd::Identity(layout_.dim(), layout_.dim());
  for (const auto& p : pipeline_) {
    if (const auto* aff = std::get_if<AffinePrimitive>(&p)) {
      cur = aff->A * cur + aff->b;
      D = aff->A * D;
    } else {
      const auto& fl = std::get<FlowPrimitive>(p);
      FlowOptions o;
      o.tol = fl.tol;
      auto [next, Dstep] = flow_with_jacobian(*fl.field, fl.time, cur, o);
      cur = next;
      D = Dstep * D;
    }
  }
  return D;
}

NumericMap NumericMap::inverse() const {
  std::vector<Primitive> pipe;
  for (auto it = pipeline_.rbegin(); it != pipeline_.rend(); ++it) {
    if (const auto* aff = std::get_if<AffinePrimitive>(&*it)) {
      MatrixXd Ainv = aff->A.partialPivLu().inverse();
      pipe.push_back(AffinePrimitive{Ainv, -(Ainv * aff->b)});
    } else {
      const auto& fl = std::get<FlowPrimitive>(*it);
      pipe.push_back(FlowPrimitive{fl.field, -fl.time, fl.tol});
    }
  }
  return NumericMap(layout_, std::move(pipe));
}

double NumericMap::omega_residual(const std::vector<VectorXd>& probes) const {
  const MatrixXd J = layout_.J();
  double worst = 0.0;
  for (const auto& z : probes) {
    MatrixXd D = jacobian(z);
    worst = std::max(worst,
                     (D.transpose() * J * D - J).cwiseAbs().maxCoeff());
  }
  return worst;
}

double NumericMap::moment_residual(const MomentMap& moment,
                                   const std::vector<VectorXd>& probes) const {
  double worst = 0.0;
  for (const auto& z : probes) {
    VectorXd a = moment.eval(z);
    VectorXd b = moment.eval(apply(z));
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  return worst;
}

double NumericMap::primitive_omega_residual(
    const std::vector<VectorXd>& probes) const {
  const MatrixXd J = layout_.J();
  double worst = 0.0;
  for (const auto& p : pipeline_) {
    if (const auto* aff = std::get_if<AffinePrimitive>(&p)) {
      worst = std::max(
          worst,
          (aff->A.transpose() * J * aff->A - J).cwiseAbs().maxCoeff());
    } else {
      const auto& fl = std::get<FlowPrimitive>(p);
      for (const auto& z : probes) {
        FlowOptions o;
        o.tol = fl.tol;
        auto [end, D] = flow_with_jacobian(*fl.field, fl.time, z, o);
        (void)end;
        worst = std::max(worst,
                         (D.transpose() * J * D - J).cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

// ------------------------------------------------------------- exponential

std::vector<VectorXd> probe_cloud(const Box& box, std::size_t count) {
  std::vector<double> lo(box.lo.data(), box.lo.data() + box.lo.size());
  std::vector<double> hi(box.hi.data(), box.hi.data() + box.hi.size());
  auto pts = halton_box(count, lo, hi);
  std::vector<VectorXd> out;
  out.reserve(pts.size());
  for (const auto& p : pts)
    out.push_back(Eigen::Map<const VectorXd>(p.data(), p.size()));
  return out;
}

NumericMap exponential(const std::shared_ptr<const HamiltonianField>& field,
                       const MomentMap& moment, const ExpOptions& opts) {
  Box box = opts.precheck_box;
  if (box.lo.size() == 0) box = Box::cube(field->dim(), 0.8);
  auto probes = probe_cloud(box, opts.precheck_points);
  double resid = bracket_residual(*field, moment, probes);
  if (resid > opts.precheck_tol)
    throw NotInAlgebraError(
        "exponential: Hamiltonian does not commute with the moment map "
        "(bracket residual " +
        std::to_string(resid) + ")");
  return NumericMap::flow_step(field->layout(), field, 1.0, opts.tol);
}

double verify_commuting_flows(
    const std::shared_ptr<const HamiltonianField>& f1,
    const std::shared_ptr<const HamiltonianField>& f2, const MomentMap& moment,
    double s, const std::vector<VectorXd>& pts, const ExpOptions& opts) {
  Box box = opts.precheck_box;
  if (box.lo.size() == 0) box = Box::cube(f1->dim(), 0.8);
  auto probes = probe_cloud(box, opts.precheck_points);
  for (const auto& f : {f1, f2}) {
    double r = bracket_residual(*f, moment, probes);
    if (r > opts.precheck_tol)
      throw NotInAlgebraError(
          "verify_commuting_flows: field fails the tangency precheck "
          "(residual " +
          std::to_string(r) + ")");
  }
  auto sum = std::make_shared<SumField>(std::vector<FieldPtr>{f1, f2},
                                        std::vector<double>{1.0, 1.0});
  FlowOptions o;
  o.tol = opts.tol;
  double worst = 0.0;
  for (const auto& z : pts) {
    VectorXd a = flow(*sum, s, z, o);
    VectorXd b = flow(*f1, s, flow(*f2, s, z, o), o);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ------------------------------------------------------------ paths of maps

namespace {

void validate_path(const PathOfMaps& path) {
  const std::size_t K = path.ts.size();
  if (K < 3 || K % 2 == 0)
    throw SpecError("path_to_field: need an odd number (>= 3) of samples");
  if (path.maps.size() != K)
    throw SpecError("path_to_field: sample count mismatch");
  double dt = path.ts[1] - path.ts[0];
  for (std::size_t i = 1; i < K; ++i) {
    double d = path.ts[i] - path.ts[i - 1];
    if (d <= 0 || std::abs(d - dt) > 1e-12)
      throw SpecError("path_to_field: sample grid must be uniform increasing");
  }
  if (std::abs(path.ts.front()) > 1e-12 || std::abs(path.ts.back() - 1.0) > 1e-12)
    throw SpecError("path_to_field: samples must cover [0, 1]");
}

}  // namespace

VectorXd path_field_value(const PathOfMaps& path,
                          const std::vector<NumericMap>& inverses,
                          const VectorXd& w) {
  const std::size_t K = path.ts.size();
  const double dt = path.ts[1] - path.ts[0];
  VectorXd acc = VectorXd::Zero(w.size());
  for (std::size_t i = 0; i < K; ++i) {
    VectorXd z = inverses[i].apply(w);
    VectorXd xt;
    if (path.derivative) {
      xt = path.derivative(path.ts[i], z);
    } else if (i == 0) {
      xt = (-3.0 * path.maps[0].apply(z) + 4.0 * path.maps[1].apply(z) -
            path.maps[2].apply(z)) /
           (2.0 * dt);
    } else if (i == K - 1) {
      xt = (3.0 * path.maps[K - 1].apply(z) - 4.0 * path.maps[K - 2].apply(z) +
            path.maps[K - 3].apply(z)) /
           (2.0 * dt);
    } else {
      xt = (path.maps[i + 1].apply(z) - path.maps[i - 1].apply(z)) / (2.0 * dt);
    }
    double simpson = (i == 0 || i == K - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += (simpson * dt / 3.0) * xt;
  }
  return acc;
}

std::shared_ptr<SampledField> path_to_field(const PathOfMaps& path,
                                            const MomentMap& moment,
                                            const Box& box,
                                            const PathToFieldOptions& opts) {
  validate_path(path);
  const std::size_t K = path.ts.size();

  if (opts.check_membership) {
    auto probes = probe_cloud(box, opts.membership_probes);
    // identity at t = 0
    for (const auto& z : probes) {
      if ((path.maps[0].apply(z) - z).cwiseAbs().maxCoeff() > 1e-9)
        throw PreconditionError("path_to_field: path does not start at the identity");
    }
    // sampled membership probe: omega and moment preservation
    const std::size_t stride = std::max<std::size_t>(1, K / 8);
    double worst = 0.0;
    for (std::size_t i = 0; i < K; i += stride) {
      worst = std::max(worst, path.maps[i].omega_residual(probes));
      worst = std::max(worst, path.maps[i].moment_residual(moment, probes));
      if (worst > opts.membership_tol)
        throw NotSystemPreservingError(
            "path_to_field: sample " + std::to_string(i) +
            " fails the system-preservation check (residual " +
            std::to_string(worst) + ")");
    }
  }

  std::vector<NumericMap> inverses;
  inverses.reserve(K);
  for (const auto& m : path.maps) inverses.push_back(m.inverse());

  std::vector<int> res = opts.grid;
  if (res.empty()) res.assign(box.lo.size(), 33);
  auto nodes = SampledField::lattice(box, res);
  std::vector<VectorXd> values;
  values.reserve(nodes.size());
  for (const auto& w : nodes)
    values.push_back(path_field_value(path, inverses, w));
  return std::make_shared<SampledField>(box, res, std::move(values));
}

std::shared_ptr<FiberSampledField> path_to_fiber_field(
    const PathOfMaps& path, const MomentMap& moment,
    const FiberFieldOptions& opts) {
  validate_path(path);
  if (moment.size() != 1 || moment.layout().dim() != 2)
    throw SpecError(
        "path_to_fiber_field: needs a single-component moment map on a "
        "2-dimensional chart");
  if (opts.c_hi <= opts.c_lo)
    throw SpecError("path_to_fiber_field: empty fiber-value band");

  expr::Compiled h(moment.sources()[0], moment.layout());
  const Eigen::MatrixXd J = moment.layout().J();

  // representative points: solve h(s d) = c along quadrant diagonals
  auto representative = [&](int sx, int sy, double c,
                            VectorXd* out) -> bool {
    Eigen::Vector2d d(sx / std::sqrt(2.0), sy / std::sqrt(2.0));
    double lo = 0.0, hi = 0.0;
    double flo = h.value(Eigen::Vector2d(Eigen::Vector2d::Zero())) - c;
    bool found = false;
    for (int i = 1; i <= 512; ++i) {
      double s = 4.0 * i / 512.0;
      double f = h.value((s * d).eval()) - c;
      if ((flo < 0) != (f < 0)) {
        hi = s;
        found = true;
        break;
      }
      lo = s;
      flo = f;
    }
    if (!found) return false;
    for (int it = 0; it < 100; ++it) {
      double mid = 0.5 * (lo + hi);
      double f = h.value((mid * d).eval()) - c;
      if ((f < 0) == (flo < 0))
        lo = mid;
      else
        hi = mid;
    }
    *out = 0.5 * (lo + hi) * d;
    return true;
  };

  if (opts.check_membership) {
    // membership probes along the band on the principal branch
    std::vector<VectorXd> probes;
    for (int i = 1; i <= opts.membership_probes; ++i) {
      double c = opts.c_lo +
                 (opts.c_hi - opts.c_lo) * halton(i, 2);
      VectorXd w;
      if (representative(1, 1, c, &w)) probes.push_back(w);
      else if (representative(1, -1, c, &w)) probes.push_back(w);
    }
    for (const auto& z : probes)
      if ((path.maps[0].apply(z) - z).cwiseAbs().maxCoeff() > 1e-9)
        throw PreconditionError(
            "path_to_fiber_field: path does not start at the identity");
    const std::size_t stride = std::max<std::size_t>(1, path.ts.size() / 8);
    for (std::size_t i = 0; i < path.ts.size(); i += stride) {
      double worst = std::max(path.maps[i].omega_residual(probes),
                              path.maps[i].moment_residual(moment, probes));
      if (worst > opts.membership_tol)
        throw NotSystemPreservingError(
            "path_to_fiber_field: sample " + std::to_string(i) +
            " fails the system-preservation check (residual " +
            std::to_string(worst) + ")");
    }
  }

  std::vector<NumericMap> inverses;
  for (const auto& m : path.maps) inverses.push_back(m.inverse());

  std::vector<std::pair<int, int>> quadrants;
  if (opts.mode == FiberBranchMode::Single)
    quadrants = {{1, 1}};
  else
    quadrants = {{1, 1}, {-1, -1}, {1, -1}, {-1, 1}};

  double tangency = 0.0;
  std::vector<FiberSampledField::Branch> branches;
  for (auto [sx, sy] : quadrants) {
    FiberSampledField::Branch branch;
    branch.sign_x = sx;
    branch.sign_y = sy;
    bool reachable = true;
    for (int i = 0; i < opts.nodes && reachable; ++i) {
      double c = opts.c_lo + (opts.c_hi - opts.c_lo) * i / (opts.nodes - 1);
      VectorXd w;
      if (!representative(sx, sy, c, &w)) {
        reachable = false;
        break;
      }
      VectorXd Y = path_field_value(path, inverses, w);
      VectorXd v = J * h.dual(w).g;
      double vv = v.squaredNorm();
      if (vv < 1e-16) {
        reachable = false;
        break;
      }
      double beta = Y.dot(v) / vv;
      tangency = std::max(tangency, (Y - beta * v).norm());
      branch.betas.push_back(beta);
    }
    if (reachable) branches.push_back(std::move(branch));
  }
  if (branches.empty())
    throw SpecError(
        "path_to_fiber_field: no quadrant branch reaches the requested band");

  auto field = std::make_shared<FiberSampledField>(
      moment.sources()[0], moment.layout(), opts.mode, opts.c_lo, opts.c_hi,
      std::move(branches));
  field->tangency_residual = tangency;
  return field;
}

}  // namespace sympnf::flows
