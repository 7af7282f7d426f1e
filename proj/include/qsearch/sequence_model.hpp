#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qsearch/distributions.hpp"
#include "qsearch/rng.hpp"

namespace qsearch {

/// Raised when a schedule violates its invariants or cannot exist.
class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Ground-truth onsets gamma_1 < ... < gamma_s of transient changes, each lasting
 * `duration` samples. Time is 1-based: the sequence is X_1 .. X_horizon.
 *
 * Invariants (checked on construction): onsets strictly increasing and >= 1,
 * consecutive onsets more than `duration` apart, last window inside the horizon.
 */
class ChangeSchedule {
 public:
  ChangeSchedule(std::vector<std::int64_t> onsets, std::int64_t duration, std::int64_t horizon);

  const std::vector<std::int64_t>& onsets() const noexcept { return onsets_; }
  std::int64_t duration() const noexcept { return duration_; }
  std::int64_t horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return onsets_.size(); }
  bool empty() const noexcept { return onsets_.empty(); }

  /// t in S, i.e. X_t ~ F1.
  bool affected(std::int64_t t) const noexcept;
  bool is_onset(std::int64_t t) const noexcept;

  /// |S| = s * T.
  std::int64_t affected_count() const noexcept {
    return static_cast<std::int64_t>(onsets_.size()) * duration_;
  }

  /// {"onsets":[...],"duration":T,"horizon":N}
  std::string to_json() const;
  static ChangeSchedule from_json(std::string_view text);

  friend bool operator==(const ChangeSchedule&, const ChangeSchedule&) = default;

 private:
  std::vector<std::int64_t> onsets_;
  std::int64_t duration_;
  std::int64_t horizon_;
};

enum class Placement { even_grid, uniform_random, explicit_list };

std::string_view to_string(Placement placement) noexcept;
Placement placement_from_string(std::string_view name);

/**
 * Builds a schedule with s onsets of duration T in [1, horizon].
 *
 * even_grid puts onset k at floor(k * horizon / s) - T + 1 (the transient closes
 * each of s equal blocks); uniform_random is uniform over all admissible
 * schedules; explicit_list validates `explicit_onsets` and ignores s.
 * Throws ScheduleError when s * (T + 1) > horizon.
 */
ChangeSchedule make_schedule(std::int64_t horizon, std::int64_t s, std::int64_t duration,
                             Placement placement, Rng& rng,
                             std::span<const std::int64_t> explicit_onsets = {});

/// X_1..X_horizon with X_t ~ F1 iff t is affected. One draw per t, in order.
std::vector<double> generate_sequence(const DistributionPair& pair, const ChangeSchedule& schedule,
                                      Rng& rng);

/// r(t) = sup{i in S : i <= t}, 0 for the empty set.
std::int64_t last_onset_at_or_before(const ChangeSchedule& schedule, std::int64_t t);

}  // namespace qsearch

namespace qsearch {

/// Streams behind a single seeded simulation: schedule placement and observations.
struct SimulationStreams {
  Rng schedule;
  Rng data;

  static SimulationStreams from_seed(std::uint64_t seed) {
    return {Rng::derive(seed, 0x5C4ED, 0), Rng::derive(seed, 0xDA7A, 0)};
  }
};

}  // namespace qsearch
