#include "dipolab/hbt/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "dipolab/core/errors.hpp"

namespace dipolab::hbt {

double CoincidenceHistogram::bin_center(std::size_t i) const {
  return (static_cast<double>(i) - half_bins) * bin_width;
}

std::int64_t CoincidenceHistogram::total() const {
  std::int64_t sum = 0;
  for (auto c : bins) sum += c;
  return sum;
}

namespace {

void check_options(const HistogramOptions& o) {
  if (!(o.bin_width > 0.0)) throw DomainError("histogram: bin_width must be > 0");
  if (o.max_order < 1) throw DomainError("histogram: max_order must be >= 1");
  if (!(o.window_fraction > 0.0) || o.window_fraction > 1.0) {
    throw DomainError("histogram: window_fraction must lie in (0, 1]");
  }
}

/// Calls fn(tau, a_time) for every A-B pair with |tau| <= reach.
template <class Fn>
void for_each_pair(const std::vector<Event>& events, double reach, Fn&& fn) {
  std::vector<std::int64_t> a, b;
  for (const auto& e : events) (e.channel == Channel::A ? a : b).push_back(e.time_ps);
  std::size_t lo = 0;
  for (const std::int64_t ta : a) {
    while (lo < b.size() && static_cast<double>(b[lo] - ta) < -reach) ++lo;
    for (std::size_t j = lo; j < b.size(); ++j) {
      const double tau = static_cast<double>(b[j] - ta);
      if (tau > reach) break;
      fn(tau, ta);
    }
  }
}

/// Peak index whose window holds tau, or nullopt-like sentinel.
int window_of(double tau, double T, double half_window, int M) {
  const auto m = static_cast<int>(std::lround(tau / T));
  if (m < -M || m > M) return INT32_MIN;
  return std::abs(tau - m * T) <= half_window ? m : INT32_MIN;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace

CoincidenceHistogram build_histogram(const TimetagStream& stream, const HistogramOptions& o) {
  check_options(o);
  if (stream.events.empty()) throw DomainError("build_histogram: empty stream");
  CoincidenceHistogram h;
  h.bin_width = o.bin_width;
  h.rep_period_T = stream.rep_period_T;
  h.max_order = o.max_order;
  h.window_half_width = 0.5 * o.window_fraction * stream.rep_period_T;
  const double reach = (o.max_order + 0.5) * stream.rep_period_T;
  h.half_bins = static_cast<int>(std::ceil(reach / o.bin_width));
  h.bins.assign(2 * static_cast<std::size_t>(h.half_bins) + 1, 0);
  h.peak_counts.assign(2 * static_cast<std::size_t>(o.max_order) + 1, 0);
  for (const auto& x : stream.crosstalk) h.crosstalk_delays.push_back(x.delay_ps);

  for_each_pair(stream.events, reach, [&](double tau, std::int64_t) {
    const auto idx = static_cast<long>(std::floor(tau / h.bin_width + 0.5)) + h.half_bins;
    if (idx >= 0 && idx < static_cast<long>(h.bins.size())) ++h.bins[idx];
    const int m = window_of(tau, h.rep_period_T, h.window_half_width, h.max_order);
    if (m != INT32_MIN) ++h.peak_counts[m + h.max_order];
  });
  return h;
}

CoincidenceHistogram histogram_from_peaks(std::vector<std::int64_t> peak_counts,
                                          double rep_period_T) {
  if (peak_counts.size() < 3 || peak_counts.size() % 2 == 0) {
    throw DomainError("histogram_from_peaks: need an odd number (>= 3) of peaks");
  }
  CoincidenceHistogram h;
  h.rep_period_T = rep_period_T;
  h.max_order = static_cast<int>(peak_counts.size() / 2);
  h.window_half_width = 0.25 * rep_period_T;
  h.peak_counts = std::move(peak_counts);
  return h;
}

std::vector<MaskedPeak> auto_mask(const CoincidenceHistogram& hist, const MaskSpec& spec) {
  std::vector<MaskedPeak> out;
  auto add = [&](int m, const char* reason) {
    for (const auto& x : out) {
      if (x.m == m) return;
    }
    out.push_back({m, reason});
  };
  if (!spec.automatic) {
    for (int m : spec.explicit_m) {
      if (m == 0) throw DomainError("mask: the central peak cannot be masked");
      if (std::abs(m) > hist.max_order) throw DomainError("mask: peak index out of range");
      add(m, "explicit");
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.m < b.m; });
    return out;
  }

  if (spec.mask_crosstalk) {
    for (double d : hist.crosstalk_delays) {
      for (double tau : {d, -d}) {
        const int m = window_of(tau, hist.rep_period_T, hist.window_half_width, hist.max_order);
        if (m != INT32_MIN && m != 0) {
          add(m, "crosstalk");
          add(-m, "crosstalk");
        }
      }
    }
  }

  std::vector<int> side;
  std::vector<double> counts;
  for (int m = -hist.max_order; m <= hist.max_order; ++m) {
    if (m == 0) continue;
    side.push_back(m);
    counts.push_back(static_cast<double>(hist.peak(m)));
  }
  const int n = static_cast<int>(side.size());
  const int win = std::clamp(spec.median_window, 1, n);
  std::vector<double> running(n), dev(n);
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - win / 2, 0, n - win);
    running[i] = median({counts.begin() + start, counts.begin() + start + win});
    dev[i] = std::abs(counts[i] - running[i]);
  }
  double sigma = 1.4826 * median(dev);
  for (int i = 0; i < n; ++i) {
    const double s = sigma > 0.0 ? sigma : std::sqrt(std::max(running[i], 1.0));
    if (dev[i] > spec.threshold_sigma * s) add(side[i], "outlier");
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.m < b.m; });
  return out;
}

G2Estimate estimate_g2(CoincidenceHistogram& hist, const MaskSpec& spec) {
  G2Estimate est;
  est.masked = auto_mask(hist, spec);
  hist.masked_m = est.masked;
  auto is_masked = [&](int m) {
    return std::any_of(est.masked.begin(), est.masked.end(), [m](const auto& x) { return x.m == m; });
  };
  std::vector<double> side;
  for (int m = -hist.max_order; m <= hist.max_order; ++m) {
    if (m != 0 && !is_masked(m)) side.push_back(static_cast<double>(hist.peak(m)));
  }
  est.N_side = static_cast<int>(side.size());
  if (est.N_side < 5) {
    throw StatisticsError("estimate_g2: only " + std::to_string(est.N_side) +
                          " unmasked side peaks, need at least 5");
  }
  est.C = static_cast<double>(hist.peak(0));
  double sum = 0.0;
  for (double x : side) sum += x;
  est.S = sum / est.N_side;
  double ss = 0.0;
  for (double x : side) ss += (x - est.S) * (x - est.S);
  est.sigma_S = std::sqrt(ss / (est.N_side - 1));
  if (!(est.S > 0.0)) throw StatisticsError("estimate_g2: side peaks are empty");
  est.g2_0 = est.C / est.S;
  const double rel = est.sigma_S / est.S;
  const double abs_term = est.C * est.sigma_S / (est.S * est.S * std::sqrt(est.N_side));
  est.uncertainty = std::sqrt(rel * rel + abs_term * abs_term);
  return est;
}

double peak_fwhm(const CoincidenceHistogram& hist, int m) {
  if (hist.bins.empty()) throw DomainError("peak_fwhm: histogram has no bins");
  const double centre = m * hist.rep_period_T;
  std::int64_t peak = 0;
  for (std::size_t i = 0; i < hist.bins.size(); ++i) {
    if (std::abs(hist.bin_center(i) - centre) <= hist.window_half_width) {
      peak = std::max(peak, hist.bins[i]);
    }
  }
  // ln c = a + b x + c x², weighted by the counts (Poisson variance of ln c).
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  int used = 0;
  for (std::size_t i = 0; i < hist.bins.size(); ++i) {
    const double x = (hist.bin_center(i) - centre) / hist.bin_width;
    const double c = static_cast<double>(hist.bins[i]);
    if (std::abs(x * hist.bin_width) > hist.window_half_width || c < 0.1 * peak || c <= 0.0) {
      continue;
    }
    const Eigen::Vector3d row(1.0, x, x * x);
    normal += c * row * row.transpose();
    rhs += c * std::log(c) * row;
    ++used;
  }
  if (used < 3) throw StatisticsError("peak_fwhm: too few populated bins in the peak");
  const Eigen::Vector3d coef = normal.ldlt().solve(rhs);
  if (!(coef(2) < 0.0)) throw StatisticsError("peak_fwhm: peak is not bell-shaped");
  const double sigma = hist.bin_width * std::sqrt(-0.5 / coef(2));
  return 2.0 * std::sqrt(2.0 * std::numbers::ln2) * sigma;
}

BootstrapResult bootstrap_g2(const TimetagStream& stream, const HistogramOptions& o,
                             const std::vector<MaskedPeak>& masked, int resamples, int blocks,
                             std::uint64_t seed) {
  check_options(o);
  if (resamples < 2 || blocks < 2) throw DomainError("bootstrap_g2: need >= 2 resamples and blocks");
  if (stream.n_pulses < blocks) throw DomainError("bootstrap_g2: fewer pulses than blocks");
  const int M = o.max_order;
  const double T = stream.rep_period_T;
  const double half = 0.5 * o.window_fraction * T;
  const std::size_t width = 2 * static_cast<std::size_t>(M) + 1;
  std::vector<double> table(static_cast<std::size_t>(blocks) * width, 0.0);

  for_each_pair(stream.events, (M + 0.5) * T, [&](double tau, std::int64_t ta) {
    const int m = window_of(tau, T, half, M);
    if (m == INT32_MIN) return;
    auto pulse = static_cast<std::int64_t>(
        std::llround(static_cast<double>(ta - stream.first_pulse) / T));
    pulse = std::clamp<std::int64_t>(pulse, 0, stream.n_pulses - 1);
    const auto block = static_cast<std::size_t>(pulse * blocks / stream.n_pulses);
    table[block * width + static_cast<std::size_t>(m + M)] += 1.0;
  });

  std::vector<char> use(width, 1);
  use[M] = 0;
  for (const auto& x : masked) {
    if (std::abs(x.m) <= M) use[x.m + M] = 0;
  }
  std::size_t n_side = 0;
  for (std::size_t j = 0; j < width; ++j) n_side += use[j];
  if (n_side < 5) throw StatisticsError("bootstrap_g2: fewer than 5 unmasked side peaks");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, blocks - 1);
  std::vector<double> values;
  values.reserve(resamples);
  std::vector<double> agg(width);
  for (int r = 0; r < resamples; ++r) {
    std::fill(agg.begin(), agg.end(), 0.0);
    for (int k = 0; k < blocks; ++k) {
      const auto b = static_cast<std::size_t>(pick(rng));
      for (std::size_t j = 0; j < width; ++j) agg[j] += table[b * width + j];
    }
    double side = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      if (use[j]) side += agg[j];
    }
    side /= static_cast<double>(n_side);
    if (side > 0.0) values.push_back(agg[M] / side);
  }
  BootstrapResult out;
  out.resamples = static_cast<int>(values.size());
  out.blocks = blocks;
  if (values.size() < 2) throw StatisticsError("bootstrap_g2: side peaks are empty");
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace dipolab::hbt
