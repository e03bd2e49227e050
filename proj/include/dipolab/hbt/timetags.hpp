#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace dipolab::hbt {

enum class Channel : std::uint8_t { A = 0, B = 1 };

struct Event {
  Channel channel = Channel::A;
  std::int64_t time_ps = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

struct CrossTalk {
  double delay_ps = 0.0;
  double probability = 0.0;
};

/// The default reflection paths: 9.5 ns and 114 ns at probability 0.005.
std::vector<CrossTalk> default_crosstalk();

struct TimetagStream {
  std::vector<Event> events;  // sorted by (time, channel)
  double rep_period_T = 12500.0;  // ps
  std::int64_t duration = 0;      // ps, all times lie in [0, duration]
  std::int64_t first_pulse = 0;   // ps, time of pulse 0
  std::int64_t n_pulses = 0;
  double jitter_sigma = 0.0;      // ps
  std::vector<CrossTalk> crosstalk;
  std::uint64_t seed = 0;
};

struct GeneratorConfig {
  std::int64_t n_pulses = 0;
  double p_click = 0.0;       // per-arm click probability per pulse
  double g2_target = 1.0;
  double jitter_sigma = 0.0;  // ps, rms of the A-B delay; each arm gets sigma/sqrt(2)
  std::vector<CrossTalk> crosstalk;
  std::uint64_t seed = 0;
  double rep_period_T = 12500.0;
};

/// Per-pulse Bernoulli pairs: both arms click with probability g p², a
/// single arm with p - g p². Every detected click may trigger a cross-talk
/// click on the other arm at +delay. Deterministic for a given seed.
TimetagStream generate_stream(const GeneratorConfig& config);

/// CSV with header `channel,time_ps`. Stream metadata goes into leading
/// `# key=value` comment lines, which the reader accepts in any order.
void write_timetags(std::ostream& out, const TimetagStream& stream);
TimetagStream read_timetags(std::istream& in);

/// Shifts every event by `offset` picoseconds.
TimetagStream translated(const TimetagStream& stream, std::int64_t offset);
/// Exchanges the roles of the A and B detectors.
TimetagStream swapped_channels(const TimetagStream& stream);

}  // namespace dipolab::hbt
