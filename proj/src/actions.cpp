#include "sympnf/actions.hpp"

#include <algorithm>
#include <cmath>

#include "sympnf/errors.hpp"

namespace sympnf::actions {

using Eigen::Vector2d;
using Eigen::VectorXd;

double primitive_curl(PrimitiveTag tag) {
  // d(y dx) = dy^dx, d(-x dy) = dy^dx, d((y dx - x dy)/2) = dy^dx
  switch (tag) {
    case PrimitiveTag::YdX: return 1.0;
    case PrimitiveTag::MinusXdY: return 1.0;
    case PrimitiveTag::Mixed: return 1.0;
  }
  return 1.0;
}

PlanarSystem PlanarSystem::make(const std::string& hamiltonian,
                                double box_radius, PrimitiveTag tag) {
  PlanarSystem sys;
  sys.H = expr::parse(hamiltonian);
  sys.domain = flows::Box::cube(2, box_radius);
  sys.tag = tag;
  return sys;
}

double CycleTrace::action(PrimitiveTag tag) const {
  switch (tag) {
    case PrimitiveTag::YdX: return action_ydx;
    case PrimitiveTag::MinusXdY: return action_mxdy;
    case PrimitiveTag::Mixed: return action_mixed;
  }
  return action_ydx;
}

double CycleTrace::tag_spread() const {
  double lo = std::min({action_ydx, action_mxdy, action_mixed});
  double hi = std::max({action_ydx, action_mxdy, action_mixed});
  return hi - lo;
}

namespace {

// signed angle between successive points as seen from the origin
double turn_angle(const Vector2d& a, const Vector2d& b) {
  double cross = a.x() * b.y() - a.y() * b.x();
  double dot = a.dot(b);
  return std::atan2(cross, dot);
}

struct AugmentedRhs {
  const expr::Compiled* H;

  void operator()(const VectorXd& y, VectorXd& dy) const {
    Eigen::Vector2d z(y(0), y(1));
    Dual d = H->dual(z);
    double xdot = d.g(1);   // dH/dy
    double ydot = -d.g(0);  // -dH/dx
    dy.resize(5);
    dy(0) = xdot;
    dy(1) = ydot;
    dy(2) = y(1) * xdot;                        // y dx
    dy(3) = -y(0) * ydot;                       // -x dy
    dy(4) = 0.5 * (y(1) * xdot - y(0) * ydot);  // (y dx - x dy)/2
  }
};

// integrate the augmented state for a fixed time from y0 (high accuracy)
VectorXd advance(const AugmentedRhs& rhs, const VectorXd& y0, double dt,
                 double tol) {
  if (dt == 0.0) return y0;
  flows::FlowOptions o;
  o.tol = tol;
  o.initial_step = std::min(1e-3, std::abs(dt));
  VectorXd out = y0;
  flows::integrate_steps(
      [&rhs](const VectorXd& y, VectorXd& dy) { rhs(y, dy); }, 0.0, dt, y0, o,
      [&out](double, const VectorXd& y) {
        out = y;
        return true;
      });
  return out;
}

}  // namespace

CycleTrace trace_cycle(const PlanarSystem& sys, double E,
                       const TraceOptions& opts) {
  VarLayout L = VarLayout::xy_blocks(1);
  expr::Compiled H(sys.H, L);

  // start point: H(s * dir) = E along the seed ray
  const Vector2d dir = opts.seed_direction.normalized();
  double s_hi = 0.0, s_max = 0.0;
  {
    // limit the ray to the domain box
    double limit = 1e300;
    for (int i = 0; i < 2; ++i) {
      if (dir(i) > 0) limit = std::min(limit, sys.domain.hi(i) / dir(i));
      if (dir(i) < 0) limit = std::min(limit, sys.domain.lo(i) / dir(i));
    }
    s_max = limit;
  }
  double H0 = H.value(Vector2d::Zero());
  // bracket scan
  double prev_s = 0.0, prev_v = H0 - E;
  bool bracketed = false;
  for (int i = 1; i <= 256 && !bracketed; ++i) {
    double s = s_max * i / 256.0;
    double v = H.value((s * dir).eval()) - E;
    if (prev_v == 0.0 || (prev_v < 0) != (v < 0)) {
      s_hi = s;
      bracketed = true;
    } else {
      prev_s = s;
      prev_v = v;
    }
  }
  if (!bracketed)
    throw RegularityError(
        "trace_cycle: no level-set crossing along the seed ray");
  double lo = prev_s, hi = s_hi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double v = H.value((mid * dir).eval()) - E;
    if ((v < 0) == (prev_v < 0))
      lo = mid;
    else
      hi = mid;
  }
  Vector2d start = 0.5 * (lo + hi) * dir;
  if (std::abs(H.value(start) - E) > 1e-9 * std::max(1.0, std::abs(E)))
    throw RegularityError(
        "trace_cycle: seed bisection did not land on the energy level");

  // regularity at the start
  double g0 = H.dual(start).g.norm();
  if (g0 < opts.grad_min)
    throw RegularityError(
        "trace_cycle: |grad H| below the regularity threshold at the start "
        "(critical energy?)");

  AugmentedRhs rhs{&H};
  VectorXd y0(5);
  y0 << start.x(), start.y(), 0.0, 0.0, 0.0;

  CycleTrace trace;
  trace.grad_min_seen = g0;
  trace.points.push_back(start);

  double total_angle = 0.0;
  VectorXd prev_state = y0;
  double prev_t = 0.0;
  bool closed = false;
  double t_before = 0.0, angle_before = 0.0, dt_hit = 0.0;
  VectorXd state_before = y0;

  flows::FlowOptions o;
  o.tol = opts.tol;

  try {
    flows::integrate_steps(
        [&rhs](const VectorXd& y, VectorXd& dy) { rhs(y, dy); }, 0.0,
        opts.max_time, y0, o, [&](double t, const VectorXd& y) {
          Vector2d cur(y(0), y(1));
          Vector2d prev(prev_state(0), prev_state(1));
          double inc = turn_angle(prev, cur);
          double g = H.dual(cur).g.norm();
          trace.grad_min_seen = std::min(trace.grad_min_seen, g);
          if (g < opts.grad_min)
            throw RegularityError(
                "trace_cycle: |grad H| below the regularity threshold along "
                "the trace");
          if (!sys.domain.contains(cur))
            throw DomainEscapeError("trace_cycle: trajectory left the domain",
                                    t);
          if (std::abs(total_angle + inc) >= 2.0 * M_PI) {
            t_before = prev_t;
            angle_before = total_angle;
            state_before = prev_state;
            dt_hit = t - prev_t;
            closed = true;
            return false;
          }
          total_angle += inc;
          prev_t = t;
          prev_state = y;
          trace.points.push_back(cur);
          return true;
        });
  } catch (const DomainEscapeError& e) {
    throw OpenCycleError("trace_cycle: open trajectory (domain escape)",
                         e.exit_time);
  }
  if (!closed)
    throw OpenCycleError("trace_cycle: no return within the time budget",
                         opts.max_time);

  // refine the return time inside the step that contained the crossing
  double dt_lo = 0.0, dt_hi = dt_hit;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (dt_lo + dt_hi);
    VectorXd ym = advance(rhs, state_before, mid, opts.tol);
    Vector2d ref(state_before(0), state_before(1));
    Vector2d cur(ym(0), ym(1));
    double acc = angle_before + turn_angle(ref, cur);
    if (std::abs(acc) >= 2.0 * M_PI)
      dt_hi = mid;
    else
      dt_lo = mid;
  }
  VectorXd yend = advance(rhs, state_before, 0.5 * (dt_lo + dt_hi), opts.tol);
  trace.period = t_before + 0.5 * (dt_lo + dt_hi);
  trace.points.push_back(Vector2d(yend(0), yend(1)));
  trace.closure_gap = (Vector2d(yend(0), yend(1)) - start).norm();
  trace.action_ydx = yend(2);
  trace.action_mxdy = yend(3);
  trace.action_mixed = yend(4);
  return trace;
}

double action_integral(const PlanarSystem& sys, double E,
                       const TraceOptions& opts) {
  return trace_cycle(sys, E, opts).action(sys.tag);
}

ActionProfile action_profile(const PlanarSystem& sys,
                             const std::vector<double>& energies,
                             const TraceOptions& opts) {
  ActionProfile prof;
  prof.energies = energies;
  for (double E : energies) {
    CycleTrace t = trace_cycle(sys, E, opts);
    prof.actions.push_back(t.action(sys.tag));
    prof.periods.push_back(t.period);
  }
  const std::size_t n = energies.size();
  prof.dpdE.assign(n, 0.0);
  prof.dpdE_noise.assign(n, 0.0);
  auto d3 = [&](std::size_t i) {
    // non-uniform-safe low-order stencils, used as the noise reference
    if (i == 0)
      return (prof.actions[1] - prof.actions[0]) /
             (prof.energies[1] - prof.energies[0]);
    if (i == n - 1)
      return (prof.actions[n - 1] - prof.actions[n - 2]) /
             (prof.energies[n - 1] - prof.energies[n - 2]);
    return (prof.actions[i + 1] - prof.actions[i - 1]) /
           (prof.energies[i + 1] - prof.energies[i - 1]);
  };
  bool uniform = n >= 5;
  double h = n >= 2 ? prof.energies[1] - prof.energies[0] : 0.0;
  for (std::size_t i = 1; i + 1 < n && uniform; ++i)
    if (std::abs(prof.energies[i + 1] - prof.energies[i] - h) > 1e-9 * h)
      uniform = false;
  for (std::size_t i = 0; i < n; ++i) {
    double base = d3(i);
    if (uniform) {
      // 4th-order five-point stencils, shifted at the edges
      const auto& f = prof.actions;
      double five;
      if (i == 0)
        five = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) /
               (12 * h);
      else if (i == 1)
        five = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h);
      else if (i == n - 2)
        five = (3 * f[n - 1] + 10 * f[n - 2] - 18 * f[n - 3] + 6 * f[n - 4] -
                f[n - 5]) /
               (12 * h);
      else if (i == n - 1)
        five = (25 * f[n - 1] - 48 * f[n - 2] + 36 * f[n - 3] -
                16 * f[n - 4] + 3 * f[n - 5]) /
               (12 * h);
      else
        five = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
      prof.dpdE[i] = five;
      prof.dpdE_noise[i] = std::abs(five - base) * 0.02;
    } else {
      prof.dpdE[i] = base;
      prof.dpdE_noise[i] = std::abs(base) * 1e-2;
    }
  }
  prof.monotone = true;
  for (std::size_t i = 1; i < n; ++i)
    if (prof.actions[i] <= prof.actions[i - 1]) prof.monotone = false;
  return prof;
}

PeriodOneReport verify_period_one(const PlanarSystem& sys,
                                  const ActionProfile& profile, double tol,
                                  const TraceOptions& opts) {
  PeriodOneReport rep;
  const std::size_t n = profile.energies.size();
  if (n < 2) throw PreconditionError("verify_period_one: profile too small");

  // differentiation noise gate
  rep.conclusive = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (profile.dpdE_noise[i] >
        1e-2 * std::max(1.0, std::abs(profile.dpdE[i])))
      rep.conclusive = false;
  }

  for (std::size_t i = 0; i < n; ++i) {
    double duality =
        std::abs(profile.dpdE[i] - profile.periods[i]) / profile.periods[i];
    rep.max_duality_residual = std::max(rep.max_duality_residual, duality);

    // direct return-time measurement for X_p = p'(E) X_H: rescale the
    // Hamiltonian by the constant p'(E) (exact on the level set) and trace
    PlanarSystem scaled = sys;
    scaled.H = expr::mul(expr::constant(profile.dpdE[i]), sys.H);
    CycleTrace t =
        trace_cycle(scaled, profile.dpdE[i] * profile.energies[i], opts);
    rep.return_times.push_back(t.period);
    rep.max_return_residual =
        std::max(rep.max_return_residual, std::abs(t.period - 1.0));
  }
  rep.passed = rep.conclusive && rep.max_return_residual < tol;
  return rep;
}

std::vector<double> product_actions(const std::vector<PlanarSystem>& systems,
                                    const std::vector<double>& energies,
                                    const TraceOptions& opts) {
  if (systems.size() != energies.size())
    throw ArityError("product_actions: one energy per block");
  std::vector<double> out;
  for (std::size_t i = 0; i < systems.size(); ++i)
    out.push_back(action_integral(systems[i], energies[i], opts));
  return out;
}

}  // namespace sympnf::actions
