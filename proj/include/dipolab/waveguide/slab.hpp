#pragma once

#include <vector>

#include "dipolab/core/device.hpp"

namespace dipolab::waveguide {

struct SlabLayer {
  double index = 1.0;
  double thickness_um = 0.0;  // ignored for the two outer, semi-infinite layers
};

/// Layered slab, listed along the transverse axis. The first and last layers
/// are semi-infinite. Only TE polarisation is modelled.
struct SlabStack {
  std::vector<SlabLayer> layers;
  double wavelength_um = 0.81;

  double k0() const;
  double outer_index() const;  // max of the two semi-infinite indices
  double core_index() const;   // max over finite layers
  /// Throws DomainError for malformed stacks, ModeCutoffError if the core
  /// cannot guide (core index not above both outer layers).
  void validate() const;
};

/// Symmetric three-layer slab: cladding / core(width) / cladding.
SlabStack symmetric_slab(double n_clad, double n_core, double width_um, double wavelength_um);

/// Vertical stack of the device with or without the strip layer on top.
SlabStack device_slab(const DeviceConfig& cfg, bool with_strip);

/// Field amplitude and slope at the lower interface of one finite layer.
struct LayerField {
  double x0 = 0.0;
  double thickness = 0.0;
  double index = 1.0;
  double e0 = 0.0;
  double de0 = 0.0;
};

struct GuidedMode {
  int order = 0;
  double beta = 0.0;      // µm⁻¹
  double n_eff = 0.0;
  double fwhm_width = 0.0;  // µm, of the intensity |E|²
  std::vector<double> x;    // µm, x = 0 at the top of the first outer layer
  std::vector<double> profile;  // E(x), L2-normalised

  // Piecewise-analytic description, used for evaluation between samples.
  double k0 = 0.0;
  double n_bottom = 1.0;
  double n_top = 1.0;
  double norm = 1.0;
  std::vector<LayerField> pieces;
  double x_top = 0.0;
  double e_top = 0.0;

  /// Normalised field at any coordinate.
  double field_at(double x) const;
};

/// TE dispersion function. Its zeros in (outer_index, core_index) are the
/// guided-mode effective indices. It is continuous in n_eff.
double te_dispersion(const SlabStack& stack, double n_eff);

/// All guided TE effective indices, descending. Roots are bracketed on a
/// 2000-point grid and refined by bisection.
std::vector<double> te_mode_indices(const SlabStack& stack);

/// Mode of the given order (0 = highest n_eff). Throws ModeCutoffError when
/// the order is not guided.
GuidedMode solve_slab_te(const SlabStack& stack, int mode_order);

/// Max |E'' + (k0² n² - β²) E| from a centred finite difference inside every
/// layer, relative to max|E| · max|k0² n² - β²|.
double mode_equation_residual(const SlabStack& stack, const GuidedMode& mode);

/// Lateral mode of a strip-loaded guide by the effective-index method. The
/// region under the strip has index n_eff(under), the sides n_eff(outside).
GuidedMode effective_index_strip(const SlabStack& stack_under_strip,
                                 const SlabStack& stack_outside, double strip_width_um);

/// Etched ridge: the sides are a homogeneous medium (air for a fully etched guide).
GuidedMode effective_index_ridge(const SlabStack& stack_in_ridge, double side_index,
                                 double ridge_width_um);

}  // namespace dipolab::waveguide
