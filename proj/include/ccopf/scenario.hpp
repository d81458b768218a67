#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ccopf/detail/csv.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/grid_model.hpp"

namespace ccopf {

struct GaussianParams {
  double mean = 1.0;
  double stddev = 0.0;
};

/// Uncertainty of DR delivery and PV output, as fractions of the scheduled
/// setpoints. Defaults are illustrative, not calibrated to any data set.
struct UncertaintyModel {
  GaussianParams dr{1.0, 0.10};
  std::map<std::string, GaussianParams> dr_overrides;  // keyed by Network::asset_key
  GaussianParams pv_sunny{1.0, 0.05};
  GaussianParams pv_cloudy{0.5, 0.15};
  double p_sunny = 0.7;

  [[nodiscard]] const GaussianParams& dr_for(const std::string& key) const {
    const auto it = dr_overrides.find(key);
    return it == dr_overrides.end() ? dr : it->second;
  }

  void validate() const {
    const auto check = [](const GaussianParams& g, const char* what) {
      if (!(g.stddev >= 0.0) || !(g.mean >= 0.0)) {
        throw ValidationError(std::string(what) + ": mean and stddev must be nonnegative");
      }
    };
    check(dr, "dr");
    for (const auto& [key, g] : dr_overrides) check(g, key.c_str());
    check(pv_sunny, "pv_sunny");
    check(pv_cloudy, "pv_cloudy");
    if (!(p_sunny >= 0.0 && p_sunny <= 1.0)) throw ValidationError("p_sunny must lie in [0, 1]");
  }

  /// Every uncertain asset delivers its schedule exactly.
  static UncertaintyModel deterministic() {
    UncertaintyModel m;
    m.dr = {1.0, 0.0};
    m.pv_sunny = {1.0, 0.0};
    m.pv_cloudy = {1.0, 0.0};
    m.p_sunny = 1.0;
    return m;
  }
};

enum class Weather { Sunny, Cloudy };

inline const char* to_string(Weather w) { return w == Weather::Sunny ? "sunny" : "cloudy"; }

/// One Monte Carlo realization. fraction[a] is the realized share of the
/// scheduled output of asset a (1 for storage and capacitors).
struct Scenario {
  std::size_t id = 0;
  Weather weather = Weather::Sunny;
  std::vector<double> fraction;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Generator for the (seed, scenario, stream) substream; `stream` is fnv1a of
/// the stream name.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t scenario, std::uint64_t stream) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ splitmix64(scenario + 0x632be59bd9b4e019ULL));
  key = splitmix64(key ^ stream);
  return std::mt19937_64(key);
}

inline double clipped_normal(std::mt19937_64& gen, const GaussianParams& g) {
  if (g.stddev == 0.0) return std::clamp(g.mean, 0.0, 1.0);
  std::normal_distribution<double> dist(g.mean, g.stddev);
  return std::clamp(dist(gen), 0.0, 1.0);
}

/// Stream id per asset (0 for assets without uncertainty).
inline std::vector<std::uint64_t> asset_streams(const Network& net) {
  std::vector<std::uint64_t> out(net.assets.size(), 0);
  std::map<std::pair<int, int>, int> seen;  // (bus, kind) -> count so far
  for (std::size_t a = 0; a < net.assets.size(); ++a) {
    const auto& asset = net.assets[a];
    const int ordinal = seen[{asset.bus, static_cast<int>(asset.kind())}]++;
    if (!is_uncertain(asset.kind())) continue;
    out[a] = fnv1a(std::string(to_string(asset.kind())) + "@" + std::to_string(asset.bus) + "#" +
                   std::to_string(ordinal));
  }
  return out;
}

inline Scenario sample_with_streams(const Network& net, const UncertaintyModel& model, std::uint64_t seed,
                                    std::size_t id, const std::vector<std::uint64_t>& streams) {
  Scenario s;
  s.id = id;
  auto weather = substream(seed, id, fnv1a("weather"));
  s.weather = std::uniform_real_distribution<double>(0.0, 1.0)(weather) < model.p_sunny ? Weather::Sunny
                                                                                       : Weather::Cloudy;
  const auto& pv = s.weather == Weather::Sunny ? model.pv_sunny : model.pv_cloudy;
  s.fraction.assign(net.assets.size(), 1.0);
  for (std::size_t a = 0; a < net.assets.size(); ++a) {
    const auto kind = net.assets[a].kind();
    if (!is_uncertain(kind)) continue;
    auto gen = substream(seed, id, streams[a]);
    const auto& g = kind == DerKind::DemandResponse && !model.dr_overrides.empty() ? model.dr_for(net.asset_key(a))
                    : kind == DerKind::DemandResponse                              ? model.dr
                                                                                   : pv;
    s.fraction[a] = clipped_normal(gen, g);
  }
  return s;
}

}  // namespace detail

/// Scenario `id` of the sample drawn with `seed`. Depends only on (seed, id) and
/// the identity of each asset (Network::asset_key), not on asset order or on
/// other scenarios.
inline Scenario sample_scenario(const Network& net, const UncertaintyModel& model, std::uint64_t seed,
                                std::size_t id) {
  return detail::sample_with_streams(net, model, seed, id, detail::asset_streams(net));
}

inline std::vector<Scenario> sample_scenarios(const Network& net, const UncertaintyModel& model,
                                              std::size_t n_s, std::uint64_t seed) {
  if (n_s < 1) throw DomainError("at least one scenario is required");
  model.validate();
  const auto streams = detail::asset_streams(net);
  std::vector<Scenario> out;
  out.reserve(n_s);
  for (std::size_t k = 0; k < n_s; ++k) out.push_back(detail::sample_with_streams(net, model, seed, k, streams));
  return out;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Per-asset sample mean and unbiased standard deviation of the fractions.
inline std::vector<Moments> empirical_moments(const std::vector<Scenario>& scenarios) {
  if (scenarios.size() < 2) throw DomainError("empirical moments need at least two scenarios");
  const std::size_t na = scenarios.front().fraction.size();
  std::vector<Moments> out(na);
  const double n = static_cast<double>(scenarios.size());
  for (std::size_t a = 0; a < na; ++a) {
    double sum = 0.0;
    for (const auto& s : scenarios) sum += s.fraction.at(a);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& s : scenarios) ss += (s.fraction[a] - mean) * (s.fraction[a] - mean);
    out[a] = {mean, std::sqrt(ss / (n - 1.0))};
  }
  return out;
}

/// CSV `scenario_id,weather,asset_id,fraction` for uncertain assets; asset_id is
/// the position in Network::assets.
inline void write_scenarios(std::ostream& out, const Network& net, const std::vector<Scenario>& scenarios) {
  detail::write_row(out, {"scenario_id", "weather", "asset_id", "fraction"});
  for (const auto& s : scenarios) {
    for (std::size_t a = 0; a < net.assets.size(); ++a) {
      if (!is_uncertain(net.assets[a].kind())) continue;
      detail::write_row(out, {std::to_string(s.id), to_string(s.weather), std::to_string(a),
                              detail::format_number(s.fraction[a])});
    }
  }
}

}  // namespace ccopf
