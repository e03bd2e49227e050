#include "dipolab/waveguide/slab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "dipolab/core/errors.hpp"

namespace dipolab::waveguide {

namespace {

constexpr int kScanPoints = 2000;
constexpr int kSamplesPerMode = 1601;

struct Transfer {
  double e;
  double de;
};

// Propagates (E, E') across a homogeneous layer of index n and length t.
Transfer propagate(double e0, double de0, double k0, double n, double beta, double t) {
  const double kk = k0 * k0 * n * n - beta * beta;
  if (kk > 0.0) {
    const double k = std::sqrt(kk);
    const double c = std::cos(k * t), s = std::sin(k * t);
    return {e0 * c + de0 * s / k, -e0 * k * s + de0 * c};
  }
  if (kk < 0.0) {
    const double q = std::sqrt(-kk);
    const double c = std::cosh(q * t), s = std::sinh(q * t);
    return {e0 * c + de0 * s / q, e0 * q * s + de0 * c};
  }
  return {e0 + de0 * t, de0};
}

double decay_constant(double k0, double n_eff, double n) {
  return k0 * std::sqrt(std::max(0.0, n_eff * n_eff - n * n));
}

}  // namespace

double SlabStack::k0() const { return 2.0 * std::numbers::pi / wavelength_um; }

double SlabStack::outer_index() const {
  return std::max(layers.front().index, layers.back().index);
}

double SlabStack::core_index() const {
  double n = 0.0;
  for (std::size_t i = 1; i + 1 < layers.size(); ++i) n = std::max(n, layers[i].index);
  return n;
}

void SlabStack::validate() const {
  if (layers.size() < 3) throw DomainError("slab: need two outer layers and at least one core layer");
  if (!(wavelength_um > 0.0)) throw DomainError("slab: wavelength must be > 0");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!(layers[i].index >= 1.0)) throw DomainError("slab: refractive indices must be >= 1");
    if (i > 0 && i + 1 < layers.size() && !(layers[i].thickness_um > 0.0)) {
      throw DomainError("slab: finite layers need a positive thickness");
    }
  }
  if (!(core_index() > outer_index())) {
    throw ModeCutoffError("mode cut off: core index does not exceed the outer layers");
  }
}

SlabStack symmetric_slab(double n_clad, double n_core, double width_um, double wavelength_um) {
  return SlabStack{{{n_clad, 0.0}, {n_core, width_um}, {n_clad, 0.0}}, wavelength_um};
}

SlabStack device_slab(const DeviceConfig& cfg, bool with_strip) {
  cfg.validate();
  SlabStack s;
  s.wavelength_um = cfg.wavelength_um;
  for (const auto& l : cfg.layer_stack) s.layers.push_back({l.index, l.thickness_um});
  s.layers.front().thickness_um = 0.0;
  if (with_strip) s.layers.push_back({cfg.strip_layer.index, cfg.strip_layer.thickness_um});
  s.layers.push_back({cfg.cover_index, 0.0});
  return s;
}

double te_dispersion(const SlabStack& stack, double n_eff) {
  const double k0 = stack.k0();
  const double beta = k0 * n_eff;
  double e = 1.0;
  double de = decay_constant(k0, n_eff, stack.layers.front().index);
  for (std::size_t i = 1; i + 1 < stack.layers.size(); ++i) {
    const auto next = propagate(e, de, k0, stack.layers[i].index, beta, stack.layers[i].thickness_um);
    // Positive rescaling keeps the sign and avoids overflow in thick layers.
    const double m = std::max(std::abs(next.e), std::abs(next.de) / k0);
    e = next.e / m;
    de = next.de / m;
  }
  return de + decay_constant(k0, n_eff, stack.layers.back().index) * e;
}

std::vector<double> te_mode_indices(const SlabStack& stack) {
  stack.validate();
  const double lo = stack.outer_index();
  const double hi = stack.core_index();
  const double span = hi - lo;
  auto grid = [&](int i) { return lo + span * (i + 0.5) / kScanPoints; };

  std::vector<double> roots;
  double x_prev = grid(0);
  double f_prev = te_dispersion(stack, x_prev);
  for (int i = 1; i < kScanPoints; ++i) {
    const double x = grid(i);
    const double f = te_dispersion(stack, x);
    if (f == 0.0) {
      roots.push_back(x);
    } else if ((f_prev < 0.0) != (f < 0.0) && f_prev != 0.0) {
      double a = x_prev, b = x, fa = f_prev;
      while (b - a > 1e-13 * std::max(1.0, b)) {
        const double m = 0.5 * (a + b);
        const double fm = te_dispersion(stack, m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x_prev = x;
    f_prev = f;
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

double GuidedMode::field_at(double x) const {
  if (x <= 0.0) return std::exp(decay_constant(k0, n_eff, n_bottom) * x) / norm;
  if (x >= x_top) return e_top * std::exp(-decay_constant(k0, n_eff, n_top) * (x - x_top)) / norm;
  auto it = std::upper_bound(pieces.begin(), pieces.end(), x,
                             [](double v, const LayerField& p) { return v < p.x0; });
  const auto& p = *(it == pieces.begin() ? it : std::prev(it));
  return propagate(p.e0, p.de0, k0, p.index, beta, x - p.x0).e / norm;
}

GuidedMode solve_slab_te(const SlabStack& stack, int mode_order) {
  if (mode_order < 0) throw DomainError("solve_slab_te: mode order must be >= 0");
  const auto roots = te_mode_indices(stack);
  if (static_cast<std::size_t>(mode_order) >= roots.size()) {
    std::ostringstream msg;
    msg << "mode cut off: order " << mode_order << " requested, " << roots.size()
        << " guided TE mode(s) in (" << stack.outer_index() << ", " << stack.core_index() << ")";
    throw ModeCutoffError(msg.str());
  }

  GuidedMode m;
  m.order = mode_order;
  m.n_eff = roots[mode_order];
  m.k0 = stack.k0();
  m.beta = m.k0 * m.n_eff;
  m.n_bottom = stack.layers.front().index;
  m.n_top = stack.layers.back().index;

  const double g_bottom = decay_constant(m.k0, m.n_eff, m.n_bottom);
  const double g_top = decay_constant(m.k0, m.n_eff, m.n_top);
  double e = 1.0, de = g_bottom, x = 0.0;
  for (std::size_t i = 1; i + 1 < stack.layers.size(); ++i) {
    const auto& l = stack.layers[i];
    m.pieces.push_back({x, l.thickness_um, l.index, e, de});
    const auto next = propagate(e, de, m.k0, l.index, m.beta, l.thickness_um);
    e = next.e;
    de = next.de;
    x += l.thickness_um;
  }
  m.x_top = x;
  m.e_top = e;

  // Normalisation: analytic tails plus Simpson inside each finite layer.
  double integral = 1.0 / (2.0 * g_bottom) + e * e / (2.0 * g_top);
  for (const auto& p : m.pieces) {
    constexpr int n = 400;
    const double h = p.thickness / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double v = propagate(p.e0, p.de0, m.k0, p.index, m.beta, k * h).e;
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += w * v * v;
    }
    integral += acc * h / 3.0;
  }
  m.norm = std::sqrt(integral);

  const double lo = -3.0 / g_bottom;
  const double hi = m.x_top + 3.0 / g_top;
  m.x.resize(kSamplesPerMode);
  m.profile.resize(kSamplesPerMode);
  std::size_t peak = 0;
  for (int k = 0; k < kSamplesPerMode; ++k) {
    m.x[k] = lo + (hi - lo) * k / (kSamplesPerMode - 1);
    m.profile[k] = m.field_at(m.x[k]);
    if (std::abs(m.profile[k]) > std::abs(m.profile[peak])) peak = k;
  }

  // Intensity FWHM between the outermost half-maximum crossings.
  const auto intensity = [&](double v) {
    const double f = m.field_at(v);
    return f * f;
  };
  const double a = m.x[peak == 0 ? 0 : peak - 1];
  const double b = m.x[std::min<std::size_t>(peak + 1, kSamplesPerMode - 1)];
  const auto refined = boost::math::tools::brent_find_minima(
      [&](double v) { return -intensity(v); }, a, b, 52);
  const double half = 0.5 * -refined.second;
  auto crossing = [&](double inside, double outside) {
    for (int it = 0; it < 200 && std::abs(outside - inside) > 1e-12; ++it) {
      const double mid = 0.5 * (inside + outside);
      (intensity(mid) >= half ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  std::size_t left = 0;
  while (left < m.x.size() && m.profile[left] * m.profile[left] < half) ++left;
  std::size_t right = m.x.size() - 1;
  while (right > 0 && m.profile[right] * m.profile[right] < half) --right;
  const double x_left = left == 0 ? m.x[0] : crossing(m.x[left], m.x[left - 1]);
  const double x_right =
      right + 1 >= m.x.size() ? m.x.back() : crossing(m.x[right], m.x[right + 1]);
  m.fwhm_width = x_right - x_left;
  return m;
}

double mode_equation_residual(const SlabStack& stack, const GuidedMode& mode) {
  const double k0 = mode.k0;
  double kmax = 0.0;
  for (const auto& l : stack.layers) {
    kmax = std::max(kmax, std::abs(k0 * k0 * l.index * l.index - mode.beta * mode.beta));
  }
  const double h = 1e-3 / std::sqrt(kmax);
  double emax = 0.0;
  for (double v : mode.profile) emax = std::max(emax, std::abs(v));

  double worst = 0.0;
  auto probe = [&](double x, double n) {
    const double d2 = (mode.field_at(x + h) - 2.0 * mode.field_at(x) + mode.field_at(x - h)) / (h * h);
    const double r = d2 + (k0 * k0 * n * n - mode.beta * mode.beta) * mode.field_at(x);
    worst = std::max(worst, std::abs(r));
  };
  // Interior points of every layer, at least 2h from any interface.
  for (const auto& p : mode.pieces) {
    for (int k = 1; k < 20; ++k) {
      const double x = p.x0 + p.thickness * k / 20.0;
      if (x - p.x0 > 2 * h && p.x0 + p.thickness - x > 2 * h) probe(x, p.index);
    }
  }
  for (double x : mode.x) {
    if (x < -2 * h) probe(x, mode.n_bottom);
    if (x > mode.x_top + 2 * h) probe(x, mode.n_top);
  }
  return worst / (emax * kmax);
}

GuidedMode effective_index_strip(const SlabStack& stack_under_strip,
                                 const SlabStack& stack_outside, double strip_width_um) {
  if (!(strip_width_um > 0.0)) throw DomainError("effective_index_strip: width must be > 0");
  const double n_in = solve_slab_te(stack_under_strip, 0).n_eff;
  const double n_out = solve_slab_te(stack_outside, 0).n_eff;
  if (!(n_in > n_out)) {
    throw ModeCutoffError("mode cut off: strip does not raise the effective index");
  }
  return solve_slab_te(symmetric_slab(n_out, n_in, strip_width_um, stack_under_strip.wavelength_um),
                       0);
}

GuidedMode effective_index_ridge(const SlabStack& stack_in_ridge, double side_index,
                                 double ridge_width_um) {
  if (!(ridge_width_um > 0.0)) throw DomainError("effective_index_ridge: width must be > 0");
  const double n_in = solve_slab_te(stack_in_ridge, 0).n_eff;
  if (!(n_in > side_index)) throw ModeCutoffError("mode cut off: ridge index below the sides");
  return solve_slab_te(symmetric_slab(side_index, n_in, ridge_width_um, stack_in_ridge.wavelength_um),
                       0);
}

}  // namespace dipolab::waveguide
