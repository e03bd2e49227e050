#include "dipolab/hbt/timetags.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "dipolab/core/errors.hpp"

namespace dipolab::hbt {

std::vector<CrossTalk> default_crosstalk() { return {{9500.0, 0.005}, {114000.0, 0.005}}; }

namespace {

void sort_events(std::vector<Event>& events) {
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.channel < b.channel;
  });
}

Channel other(Channel c) { return c == Channel::A ? Channel::B : Channel::A; }

}  // namespace

TimetagStream generate_stream(const GeneratorConfig& cfg) {
  if (cfg.n_pulses <= 0) throw DomainError("generate_stream: n_pulses must be > 0");
  if (!(cfg.p_click > 0.0) || !(cfg.p_click < 1.0)) {
    throw DomainError("generate_stream: p_click must lie in (0, 1)");
  }
  if (!(cfg.g2_target >= 0.0)) throw DomainError("generate_stream: g2_target must be >= 0");
  if (!(cfg.rep_period_T > 0.0)) throw DomainError("generate_stream: rep_period_T must be > 0");
  if (!(cfg.jitter_sigma >= 0.0)) throw DomainError("generate_stream: jitter_sigma must be >= 0");
  const double p = cfg.p_click;
  const double both = cfg.g2_target * p * p;
  const double single = p - both;
  const double none = 1.0 - 2.0 * p + both;
  if (single < 0.0 || none < 0.0) {
    throw DomainError("generate_stream: g2_target and p_click give an invalid joint probability");
  }
  double max_delay = 0.0;
  for (const auto& x : cfg.crosstalk) {
    if (!(x.probability >= 0.0) || x.probability > 1.0 || !(x.delay_ps >= 0.0)) {
      throw DomainError("generate_stream: cross-talk needs delay >= 0 and probability in [0, 1]");
    }
    max_delay = std::max(max_delay, x.delay_ps);
  }

  TimetagStream s;
  s.rep_period_T = cfg.rep_period_T;
  s.jitter_sigma = cfg.jitter_sigma;
  s.crosstalk = cfg.crosstalk;
  s.seed = cfg.seed;
  s.n_pulses = cfg.n_pulses;
  s.first_pulse = static_cast<std::int64_t>(std::llround(cfg.rep_period_T));
  s.duration = static_cast<std::int64_t>(
      std::ceil((static_cast<double>(cfg.n_pulses) + 1.0) * cfg.rep_period_T + max_delay));

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, cfg.jitter_sigma / std::sqrt(2.0));
  auto jitter = [&]() { return cfg.jitter_sigma > 0.0 ? gauss(rng) : 0.0; };

  auto emit = [&](Channel c, double t) {
    const auto ti = static_cast<std::int64_t>(std::llround(t));
    if (ti >= 0 && ti <= s.duration) s.events.push_back({c, ti});
  };
  auto click = [&](Channel c, double pulse_time) {
    const double t = pulse_time + jitter();
    emit(c, t);
    for (const auto& x : cfg.crosstalk) {
      if (x.probability > 0.0 && uniform(rng) < x.probability) {
        emit(other(c), t + x.delay_ps + jitter());
      }
    }
  };

  s.events.reserve(static_cast<std::size_t>(2.2 * p * static_cast<double>(cfg.n_pulses)) + 16);
  for (std::int64_t k = 0; k < cfg.n_pulses; ++k) {
    const double u = uniform(rng);
    if (u >= 1.0 - none) continue;
    const double t = static_cast<double>(s.first_pulse) + static_cast<double>(k) * cfg.rep_period_T;
    if (u < both) {
      click(Channel::A, t);
      click(Channel::B, t);
    } else if (u < both + single) {
      click(Channel::A, t);
    } else {
      click(Channel::B, t);
    }
  }
  sort_events(s.events);
  return s;
}

void write_timetags(std::ostream& out, const TimetagStream& s) {
  out << "# rep_period_ps=" << s.rep_period_T << '\n'
      << "# duration_ps=" << s.duration << '\n'
      << "# first_pulse_ps=" << s.first_pulse << '\n'
      << "# n_pulses=" << s.n_pulses << '\n'
      << "# jitter_sigma_ps=" << s.jitter_sigma << '\n'
      << "# seed=" << s.seed << '\n';
  for (const auto& x : s.crosstalk) {
    out << "# crosstalk=" << x.delay_ps << ':' << x.probability << '\n';
  }
  out << "channel,time_ps\n";
  for (const auto& e : s.events) {
    out << (e.channel == Channel::A ? 'A' : 'B') << ',' << e.time_ps << '\n';
  }
}

TimetagStream read_timetags(std::istream& in) {
  TimetagStream s;
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  bool have_duration = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "rep_period_ps") s.rep_period_T = std::stod(value);
      else if (key == "duration_ps") { s.duration = std::stoll(value); have_duration = true; }
      else if (key == "first_pulse_ps") s.first_pulse = std::stoll(value);
      else if (key == "n_pulses") s.n_pulses = std::stoll(value);
      else if (key == "jitter_sigma_ps") s.jitter_sigma = std::stod(value);
      else if (key == "seed") s.seed = std::stoull(value);
      else if (key == "crosstalk") {
        const auto colon = value.find(':');
        if (colon == std::string::npos) throw DomainError("timetags: malformed crosstalk entry");
        s.crosstalk.push_back({std::stod(value.substr(0, colon)), std::stod(value.substr(colon + 1))});
      }
      continue;
    }
    if (!header) {
      if (line != "channel,time_ps") {
        throw DomainError("timetags: expected header 'channel,time_ps' at line " +
                          std::to_string(line_no));
      }
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma != 1 || (line[0] != 'A' && line[0] != 'B')) {
      throw DomainError("timetags: malformed event at line " + std::to_string(line_no));
    }
    std::int64_t t = 0;
    const char* first = line.data() + 2;
    const char* last = line.data() + line.size();
    const auto [ptr, ec] = std::from_chars(first, last, t);
    if (ec != std::errc() || ptr != last) {
      throw DomainError("timetags: bad time at line " + std::to_string(line_no));
    }
    s.events.push_back({line[0] == 'A' ? Channel::A : Channel::B, t});
  }
  if (!header) throw DomainError("timetags: missing header");
  const bool sorted = std::is_sorted(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) {
    return a.time_ps < b.time_ps;
  });
  if (!sorted) throw DomainError("timetags: events must be sorted by time");
  if (!have_duration && !s.events.empty()) s.duration = s.events.back().time_ps;
  return s;
}

TimetagStream translated(const TimetagStream& stream, std::int64_t offset) {
  TimetagStream out = stream;
  for (auto& e : out.events) e.time_ps += offset;
  out.first_pulse += offset;
  out.duration += offset;
  return out;
}

TimetagStream swapped_channels(const TimetagStream& stream) {
  TimetagStream out = stream;
  for (auto& e : out.events) e.channel = other(e.channel);
  sort_events(out.events);
  return out;
}

}  // namespace dipolab::hbt
