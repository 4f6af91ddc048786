#include "sympnf/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sympnf/errors.hpp"

namespace sympnf::models {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- rationals

Rational Rational::mod1(long long n, long long d) {
  if (d <= 0) throw SpecError("Rational: denominator must be positive");
  long long g = std::gcd(n < 0 ? -n : n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  n %= d;
  if (n < 0) n += d;
  return Rational{n, d};
}

Rational Rational::plus(const Rational& o) const {
  return mod1(num * o.den + o.num * den, den * o.den);
}

bool GroupElement::is_identity() const {
  for (bool f : flips)
    if (f) return false;
  for (const auto& t : trans)
    if (!t.is_zero()) return false;
  return true;
}

// ------------------------------------------------------------- group closure

namespace {

std::string element_key(const GroupElement& e) {
  std::string k;
  for (bool f : e.flips) k += f ? '1' : '0';
  for (const auto& t : e.trans)
    k += "|" + std::to_string(t.num) + "/" + std::to_string(t.den);
  return k;
}

GroupElement multiply(const GroupElement& a, const GroupElement& b) {
  GroupElement r = a;
  for (std::size_t i = 0; i < r.flips.size(); ++i)
    r.flips[i] = r.flips[i] != b.flips[i];
  for (std::size_t i = 0; i < r.trans.size(); ++i)
    r.trans[i] = r.trans[i].plus(b.trans[i]);
  return r;
}

}  // namespace

TwistingGroup TwistingGroup::trivial(int k_h, int m) {
  TwistingGroup g;
  g.k_h_ = k_h;
  g.m_ = m;
  GroupElement id;
  id.flips.assign(k_h, false);
  id.trans.assign(m, Rational{0, 1});
  g.elements_ = {id};
  return g;
}

TwistingGroup TwistingGroup::generated(const std::vector<TwistGenerator>& gens,
                                       int k_h, int m) {
  TwistingGroup g = trivial(k_h, m);
  std::vector<GroupElement> basis;
  for (const auto& spec : gens) {
    GroupElement e;
    e.flips.assign(k_h, false);
    for (int idx : spec.flips) {
      if (idx < 1 || idx > k_h)
        throw SpecError("twist generator flips a nonexistent hyperbolic pair");
      e.flips[idx - 1] = true;
    }
    if (static_cast<int>(spec.translation.size()) != m)
      throw SpecError("twist generator translation must have m entries");
    e.trans.clear();
    for (const auto& r : spec.translation)
      e.trans.push_back(Rational::mod1(r.num, r.den));
    basis.push_back(e);
  }

  std::map<std::string, GroupElement> closure;
  closure[element_key(g.elements_[0])] = g.elements_[0];
  std::vector<GroupElement> frontier{g.elements_[0]};
  const std::size_t kMaxElements = 4096;
  while (!frontier.empty()) {
    std::vector<GroupElement> next;
    for (const auto& e : frontier) {
      for (const auto& b : basis) {
        GroupElement prod = multiply(e, b);
        std::string key = element_key(prod);
        if (!closure.count(key)) {
          closure[key] = prod;
          next.push_back(prod);
          if (closure.size() > kMaxElements)
            throw SpecError("twisting group closure exceeds the size bound");
        }
      }
    }
    frontier = std::move(next);
  }
  g.elements_.clear();
  for (auto& [k, e] : closure) g.elements_.push_back(e);
  return g;
}

// --------------------------------------------------------------- the model

LinearModel::LinearModel(int n, int m, const quad::WilliamsonType& wtype,
                         TwistingGroup gamma, double p_radius,
                         double xy_radius)
    : n_(n),
      m_(m),
      wtype_(wtype),
      gamma_(std::move(gamma)),
      p_radius_(p_radius),
      xy_radius_(xy_radius) {
  if (m_ < 0 || m_ > n_) throw SpecError("LinearModel: need 0 <= m <= n");
  if (wtype_.m != m_ || wtype_.n != n_ ||
      wtype_.k_e + wtype_.k_h + 2 * wtype_.k_f != n_ - m_)
    throw SpecError("LinearModel: Williamson type inconsistent with (n, m)");
  if (gamma_.k_h() != wtype_.k_h || gamma_.m() != m_)
    throw SpecError("LinearModel: twisting group has wrong shape");

  // freeness by orbit enumeration at a generic point and at xy = 0
  ModelPoint generic;
  generic.p = VectorXd::Zero(m_);
  generic.q = VectorXd::Zero(m_);
  for (int i = 0; i < m_; ++i) generic.q(i) = 0.1234567 + 0.0321 * i;
  generic.xy = VectorXd::Zero(2 * (n_ - m_));
  for (int j = 0; j < 2 * (n_ - m_); ++j) generic.xy(j) = 0.31 + 0.07 * j;
  ModelPoint origin = generic;
  origin.xy.setZero();
  for (const auto& e : gamma_.elements()) {
    if (e.is_identity()) continue;
    for (const ModelPoint* pt : {&generic, &origin}) {
      ModelPoint img = apply_group_element(*this, e, *pt);
      bool moved_q = m_ > 0 && (img.q - pt->q).cwiseAbs().maxCoeff() != 0.0;
      bool moved_xy =
          pt->xy.size() > 0 && (img.xy - pt->xy).cwiseAbs().maxCoeff() != 0.0;
      if (!moved_q && !moved_xy)
        throw SpecError(
            "LinearModel: twisting group does not act freely "
            "(an element fixes a point; give it a torus translation part)");
    }
  }
}

flows::MomentMap LinearModel::moment() const {
  using namespace sympnf::expr;
  std::vector<ExprPtr> comps;
  for (int i = 1; i <= m_; ++i) comps.push_back(var("p" + std::to_string(i)));
  const int k_e = wtype_.k_e, k_h = wtype_.k_h, k_f = wtype_.k_f;
  auto xv = [](int i) { return var("x" + std::to_string(i)); };
  auto yv = [](int i) { return var("y" + std::to_string(i)); };
  for (int i = 1; i <= k_e; ++i)
    comps.push_back(add(pow(xv(i), 2), pow(yv(i), 2)));
  for (int i = k_e + 1; i <= k_e + k_h; ++i)
    comps.push_back(mul(xv(i), yv(i)));
  for (int j = 0; j < k_f; ++j) {
    int i = k_e + k_h + 2 * j + 1;
    comps.push_back(sub(mul(xv(i), yv(i + 1)), mul(xv(i + 1), yv(i))));
    comps.push_back(add(mul(xv(i), yv(i)), mul(xv(i + 1), yv(i + 1))));
  }
  return flows::MomentMap(comps, layout());
}

VectorXd LinearModel::flatten(const ModelPoint& pt) const {
  VectorXd z(2 * n_);
  z.head(m_) = pt.p;
  z.segment(m_, m_) = pt.q;
  z.tail(2 * (n_ - m_)) = pt.xy;
  return z;
}

ModelPoint LinearModel::unflatten(const VectorXd& z) const {
  if (z.size() != 2 * n_)
    throw DimensionError("LinearModel: flattened point of wrong dimension");
  ModelPoint pt;
  pt.p = z.head(m_);
  pt.q = z.segment(m_, m_);
  pt.xy = z.tail(2 * (n_ - m_));
  return pt;
}

ModelPoint LinearModel::canonicalize_chart(const ModelPoint& pt) const {
  if (pt.p.size() != m_ || pt.q.size() != m_ || pt.xy.size() != 2 * (n_ - m_))
    throw DimensionError("ModelPoint has wrong component sizes");
  ModelPoint out = pt;
  for (int i = 0; i < m_; ++i) out.q(i) = pt.q(i) - std::floor(pt.q(i));
  if (out.p.norm() > p_radius_ || out.xy.norm() > xy_radius_)
    throw OutOfDomainError("model point outside the disk radii");
  return out;
}

VectorXd moment_map(const LinearModel& model, const ModelPoint& pt) {
  ModelPoint c = model.canonicalize_chart(pt);
  return model.moment().eval(model.flatten(c));
}

ModelPoint apply_group_element(const LinearModel& model, const GroupElement& g,
                               const ModelPoint& pt) {
  ModelPoint out = pt;
  for (int i = 0; i < model.m(); ++i) {
    double q = out.q(i) + g.trans[i].value();
    out.q(i) = q - std::floor(q);
  }
  const int k_e = model.wtype().k_e;
  for (int j = 0; j < model.wtype().k_h; ++j) {
    if (!g.flips[j]) continue;
    int comp = k_e + j;  // 0-based component index into the xy pairs
    out.xy(2 * comp) = -out.xy(2 * comp);
    out.xy(2 * comp + 1) = -out.xy(2 * comp + 1);
  }
  return out;
}

ModelPoint quotient_canonicalize(const LinearModel& model,
                                 const ModelPoint& pt) {
  ModelPoint base = model.canonicalize_chart(pt);
  std::vector<ModelPoint> orbit;
  orbit.reserve(model.gamma().size());
  for (const auto& e : model.gamma().elements())
    orbit.push_back(apply_group_element(model, e, base));
  auto lex_less = [](const ModelPoint& a, const ModelPoint& b) {
    for (int i = 0; i < a.q.size(); ++i)
      if (a.q(i) != b.q(i)) return a.q(i) < b.q(i);
    for (int i = 0; i < a.xy.size(); ++i)
      if (a.xy(i) != b.xy(i)) return a.xy(i) < b.xy(i);
    for (int i = 0; i < a.p.size(); ++i)
      if (a.p(i) != b.p(i)) return a.p(i) < b.p(i);
    return false;
  };
  const ModelPoint* best = &orbit[0];
  for (const auto& cand : orbit)
    if (lex_less(cand, *best)) best = &cand;
  return *best;
}

// ------------------------------------------------------------ automorphisms

ModelAutomorphism ModelAutomorphism::identity(const LinearModel& model) {
  ModelAutomorphism a;
  a.torus_translation = VectorXd::Zero(model.m());
  a.elliptic_angles = VectorXd::Zero(model.wtype().k_e);
  a.hyperbolic_log = VectorXd::Zero(model.wtype().k_h);
  a.hyperbolic_sign.assign(model.wtype().k_h, 1);
  a.ff_log = VectorXd::Zero(model.wtype().k_f);
  a.ff_angle = VectorXd::Zero(model.wtype().k_f);
  return a;
}

ModelAutomorphism ModelAutomorphism::compose(const LinearModel& model,
                                             const ModelAutomorphism& a,
                                             const ModelAutomorphism& b) {
  ModelAutomorphism r = identity(model);
  for (int i = 0; i < model.m(); ++i) {
    double t = a.torus_translation(i) + b.torus_translation(i);
    r.torus_translation(i) = t - std::floor(t);
  }
  r.elliptic_angles = a.elliptic_angles + b.elliptic_angles;
  r.hyperbolic_log = a.hyperbolic_log + b.hyperbolic_log;
  for (int j = 0; j < model.wtype().k_h; ++j)
    r.hyperbolic_sign[j] = a.hyperbolic_sign[j] * b.hyperbolic_sign[j];
  r.ff_log = a.ff_log + b.ff_log;
  r.ff_angle = a.ff_angle + b.ff_angle;
  return r;
}

flows::NumericMap automorphism_to_map(const LinearModel& model,
                                      const ModelAutomorphism& a) {
  const int m = model.m();
  const int k_e = model.wtype().k_e, k_h = model.wtype().k_h,
            k_f = model.wtype().k_f;
  const int dim = 2 * model.n();
  MatrixXd A = MatrixXd::Identity(dim, dim);
  VectorXd b = VectorXd::Zero(dim);
  for (int i = 0; i < m; ++i) b(m + i) = a.torus_translation(i);

  auto xslot = [&](int comp) { return 2 * m + 2 * comp; };  // 0-based comp
  for (int i = 0; i < k_e; ++i) {
    double c = std::cos(a.elliptic_angles(i));
    double s = std::sin(a.elliptic_angles(i));
    int xs = xslot(i), ys = xs + 1;
    A(xs, xs) = c;
    A(xs, ys) = -s;
    A(ys, xs) = s;
    A(ys, ys) = c;
  }
  for (int j = 0; j < k_h; ++j) {
    int comp = k_e + j;
    double sign = static_cast<double>(a.hyperbolic_sign[j]);
    int xs = xslot(comp), ys = xs + 1;
    A(xs, xs) = sign * std::exp(a.hyperbolic_log(j));
    A(ys, ys) = sign * std::exp(-a.hyperbolic_log(j));
  }
  for (int j = 0; j < k_f; ++j) {
    int comp = k_e + k_h + 2 * j;
    double c = std::cos(a.ff_angle(j)), s = std::sin(a.ff_angle(j));
    double ep = std::exp(a.ff_log(j)), em = std::exp(-a.ff_log(j));
    int x1 = xslot(comp), y1 = x1 + 1, x2 = xslot(comp + 1), y2 = x2 + 1;
    // rotate (x_i, x_{i+1}) and (y_i, y_{i+1}) by the same angle,
    // scale the x's by e^t and the y's by e^{-t}
    A(x1, x1) = c * ep;
    A(x1, x2) = -s * ep;
    A(x2, x1) = s * ep;
    A(x2, x2) = c * ep;
    A(y1, y1) = c * em;
    A(y1, y2) = -s * em;
    A(y2, y1) = s * em;
    A(y2, y2) = c * em;
  }
  return flows::NumericMap::linear(model.layout(), A, b);
}

ModelPoint apply_automorphism(const LinearModel& model,
                              const ModelAutomorphism& a,
                              const ModelPoint& pt) {
  flows::NumericMap map = automorphism_to_map(model, a);
  ModelPoint out = model.unflatten(map.apply(model.flatten(pt)));
  for (int i = 0; i < model.m(); ++i) out.q(i) -= std::floor(out.q(i));
  return out;
}

ModelPoint torus_action_flow(const LinearModel& model,
                             const VectorXd& direction, double t,
                             const ModelPoint& pt) {
  if (direction.size() != model.m())
    throw DimensionError("torus_action_flow: direction must have m entries");
  ModelPoint out = pt;
  for (int i = 0; i < model.m(); ++i) {
    double q = out.q(i) + t * direction(i);
    out.q(i) = q - std::floor(q);
  }
  return out;
}

// ------------------------------------------------- structure verification

namespace {

double wrap_half(double x) {
  double w = x - std::floor(x);
  return w >= 0.5 ? w - 1.0 : w;
}

}  // namespace

std::vector<MapStructureReport> verify_linear_action_structure(
    const LinearModel& model, const std::vector<flows::NumericMap>& maps,
    const StructureOptions& opts) {
  const int n = model.n(), m = model.m();
  const int fiber_dim = 2 * (n - m);
  const int dim = 2 * n;

  const int g = opts.grid_per_axis;
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(g);
  if (total > opts.max_grid_points)
    throw SpecError("structure grid too large; lower grid_per_axis");

  flows::Box box;
  box.lo.resize(dim);
  box.hi.resize(dim);
  for (int i = 0; i < m; ++i) {
    box.lo(i) = -opts.domain_fraction * model.p_radius();
    box.hi(i) = opts.domain_fraction * model.p_radius();
    box.lo(m + i) = 0.0;
    box.hi(m + i) = 1.0 - 1.0 / g;  // torus axis, one full period
  }
  double r = opts.domain_fraction * model.xy_radius() /
             std::sqrt(static_cast<double>(std::max(1, fiber_dim)));
  for (int j = 0; j < fiber_dim; ++j) {
    box.lo(2 * m + j) = -r;
    box.hi(2 * m + j) = r;
  }
  std::vector<int> res(dim, g);
  auto grid = flows::SampledField::lattice(box, res);

  flows::MomentMap moment = model.moment();
  auto omega_probes = flows::probe_cloud(box, opts.omega_probe_count);

  std::vector<MapStructureReport> reports;
  for (const auto& map : maps) {
    MapStructureReport rep;
    if (!(map.layout() == model.layout()))
      throw DimensionError("verify_linear_action_structure: wrong map layout");

    rep.omega_residual = map.omega_residual(omega_probes);
    rep.moment_residual = map.moment_residual(moment, grid);
    rep.system_preserving =
        rep.omega_residual < opts.eps && rep.moment_residual < opts.eps;
    if (!rep.system_preserving) {
      rep.note = "rejected by the system-preservation precheck";
      reports.push_back(rep);
      continue;
    }

    // fiber linear part at p = q = 0, xy = 0
    VectorXd base = VectorXd::Zero(dim);
    MatrixXd D = map.jacobian(base);
    MatrixXd L = D.block(2 * m, 2 * m, fiber_dim, fiber_dim);

    std::map<std::vector<long>, std::pair<VectorXd, int>> slices;
    std::vector<std::pair<std::vector<long>, VectorXd>> samples;
    double fiber_dev = 0.0;
    for (const auto& w : grid) {
      VectorXd img = map.apply(w);
      VectorXd gshift(m);
      for (int i = 0; i < m; ++i) gshift(i) = wrap_half(img(m + i) - w(m + i));
      VectorXd lin = L * w.tail(fiber_dim);
      fiber_dev = std::max(
          fiber_dev, (img.tail(fiber_dim) - lin).cwiseAbs().maxCoeff());

      std::vector<long> pkey(m);
      for (int i = 0; i < m; ++i) pkey[i] = std::lround(w(i) * 1e9);
      auto& slot = slices[pkey];
      if (slot.second == 0) slot.first = VectorXd::Zero(m);
      slot.first += gshift;
      slot.second += 1;
      samples.emplace_back(std::move(pkey), std::move(gshift));
    }
    for (auto& [key, acc] : slices) acc.first /= acc.second;
    double scatter = 0.0, variation = 0.0;
    for (const auto& [key, gshift] : samples)
      if (m > 0)
        scatter = std::max(
            scatter, (gshift - slices[key].first).cwiseAbs().maxCoeff());
    VectorXd ref;
    for (const auto& [key, acc] : slices) {
      if (ref.size() == 0) ref = acc.first;
      if (m > 0)
        variation =
            std::max(variation, (acc.first - ref).cwiseAbs().maxCoeff());
    }
    rep.translation_scatter = scatter;
    rep.translation_p_variation = variation;
    rep.fiber_linear_deviation = fiber_dev;
    rep.passed = variation < opts.eps && fiber_dev < opts.eps;
    if (!rep.passed) rep.note = "structure decomposition exceeded eps";
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace sympnf::models
