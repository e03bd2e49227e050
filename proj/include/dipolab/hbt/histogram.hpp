#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dipolab/hbt/timetags.hpp"

namespace dipolab::hbt {

struct HistogramOptions {
  double bin_width = 87.0;      // ps
  int max_order = 50;           // peaks m = -M..M
  double window_fraction = 0.5; // integration window width as a fraction of T
};

struct MaskedPeak {
  int m = 0;
  std::string reason;  // "explicit", "outlier" or "crosstalk"
};

/// Delay histogram of B - A pairs. Bins are centred on multiples of the bin
/// width; peak integrals count pairs whose exact delay lies in the window
/// centred on m T.
struct CoincidenceHistogram {
  double bin_width = 87.0;
  double rep_period_T = 12500.0;
  int max_order = 50;
  double window_half_width = 3125.0;  // ps
  int half_bins = 0;                  // bins run over index -half_bins..half_bins
  std::vector<std::int64_t> bins;
  std::vector<std::int64_t> peak_counts;  // index m + max_order
  std::vector<MaskedPeak> masked_m;       // filled by estimate_g2
  std::vector<double> crosstalk_delays;   // ps, copied from the stream

  double bin_center(std::size_t i) const;
  std::int64_t total() const;
  std::int64_t peak(int m) const { return peak_counts.at(static_cast<std::size_t>(m + max_order)); }
};

CoincidenceHistogram build_histogram(const TimetagStream& stream,
                                     const HistogramOptions& options = {});

/// Hand-built histogram from peak integrals only (bins left empty).
CoincidenceHistogram histogram_from_peaks(std::vector<std::int64_t> peak_counts,
                                          double rep_period_T = 12500.0);

struct MaskSpec {
  bool automatic = true;
  std::vector<int> explicit_m;    // used as given when automatic is false
  double threshold_sigma = 5.0;
  int median_window = 11;         // side peaks in the running median
  bool mask_crosstalk = true;     // mask windows containing ± known delays
};

struct G2Estimate {
  double C = 0.0;
  double S = 0.0;
  double sigma_S = 0.0;
  int N_side = 0;
  double g2_0 = 0.0;
  double uncertainty = 0.0;
  std::vector<MaskedPeak> masked;
};

/// g2 = C / S with uncertainty sqrt((sigma_S/S)² + (C sigma_S / (S² sqrt N))²).
/// The mask is recorded in hist.masked_m. Needs at least 5 unmasked side peaks.
G2Estimate estimate_g2(CoincidenceHistogram& hist, const MaskSpec& mask = {});

/// Mask decision alone, for reporting.
std::vector<MaskedPeak> auto_mask(const CoincidenceHistogram& hist, const MaskSpec& mask = {});

/// Gaussian FWHM of peak m from a count-weighted parabola fit to the log of
/// the bins above 10% of the peak height.
double peak_fwhm(const CoincidenceHistogram& hist, int m);

struct BootstrapResult {
  double mean = 0.0;
  double std_dev = 0.0;
  int resamples = 0;
  int blocks = 0;
};

/// Block bootstrap over pulses: the stream is cut into contiguous blocks of
/// pulses, blocks are resampled with replacement and C / S recomputed with
/// the given masked peaks excluded.
BootstrapResult bootstrap_g2(const TimetagStream& stream, const HistogramOptions& options,
                             const std::vector<MaskedPeak>& masked, int resamples = 400,
                             int blocks = 200, std::uint64_t seed = 1);

}  // namespace dipolab::hbt
