#include "qsearch/sequence_model.hpp"

#include <algorithm>
#include "json.hpp"
#include <sstream>

namespace qsearch {

ChangeSchedule::ChangeSchedule(std::vector<std::int64_t> onsets, std::int64_t duration,
                               std::int64_t horizon)
    : onsets_(std::move(onsets)), duration_(duration), horizon_(horizon) {
  if (duration_ < 1) throw ScheduleError("schedule: duration must be at least 1");
  if (horizon_ < 1) throw ScheduleError("schedule: horizon must be at least 1");
  for (std::size_t i = 0; i < onsets_.size(); ++i) {
    if (onsets_[i] < 1) throw ScheduleError("schedule: onsets are 1-based");
    if (i > 0 && onsets_[i] - onsets_[i - 1] <= duration_) {
      std::ostringstream msg;
      msg << "schedule: onsets " << onsets_[i - 1] << " and " << onsets_[i]
          << " are not more than T=" << duration_ << " apart";
      throw ScheduleError(msg.str());
    }
  }
  if (!onsets_.empty() && onsets_.back() + duration_ - 1 > horizon_) {
    throw ScheduleError("schedule: last transient window runs past the horizon");
  }
}

bool ChangeSchedule::affected(std::int64_t t) const noexcept {
  auto it = std::upper_bound(onsets_.begin(), onsets_.end(), t);
  if (it == onsets_.begin()) return false;
  return t <= *std::prev(it) + duration_ - 1;
}

bool ChangeSchedule::is_onset(std::int64_t t) const noexcept {
  return std::binary_search(onsets_.begin(), onsets_.end(), t);
}

std::string ChangeSchedule::to_json() const {
  nlohmann::ordered_json j;
  j["onsets"] = onsets_;
  j["duration"] = duration_;
  j["horizon"] = horizon_;
  return j.dump();
}

ChangeSchedule ChangeSchedule::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    return ChangeSchedule(j.at("onsets").get<std::vector<std::int64_t>>(),
                          j.at("duration").get<std::int64_t>(),
                          j.at("horizon").get<std::int64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ScheduleError(std::string("schedule json: ") + e.what());
  }
}

std::string_view to_string(Placement placement) noexcept {
  switch (placement) {
    case Placement::even_grid:
      return "even_grid";
    case Placement::uniform_random:
      return "uniform_random";
    case Placement::explicit_list:
      return "explicit";
  }
  return "unknown";
}

Placement placement_from_string(std::string_view name) {
  if (name == "even_grid") return Placement::even_grid;
  if (name == "uniform_random") return Placement::uniform_random;
  if (name == "explicit") return Placement::explicit_list;
  throw std::invalid_argument("unknown placement '" + std::string(name) + "'");
}

ChangeSchedule make_schedule(std::int64_t horizon, std::int64_t s, std::int64_t duration,
                             Placement placement, Rng& rng,
                             std::span<const std::int64_t> explicit_onsets) {
  if (placement == Placement::explicit_list) {
    return ChangeSchedule({explicit_onsets.begin(), explicit_onsets.end()}, duration, horizon);
  }
  if (horizon < 1 || duration < 1 || s < 0) {
    throw ScheduleError("schedule: horizon and T must be positive, s nonnegative");
  }
  if (s * (duration + 1) > horizon) {
    std::ostringstream msg;
    msg << "schedule infeasible: s*(T+1) = " << s * (duration + 1) << " exceeds horizon "
        << horizon;
    throw ScheduleError(msg.str());
  }

  std::vector<std::int64_t> onsets;
  onsets.reserve(static_cast<std::size_t>(s));
  if (placement == Placement::even_grid) {
    for (std::int64_t k = 1; k <= s; ++k) onsets.push_back(k * horizon / s - duration + 1);
  } else {
    // Shift trick: gamma_i = y_i + (i-1)*T maps s-subsets y of {1..slots}
    // one-to-one onto admissible schedules. Subsets come from selection sampling.
    const std::int64_t slots = horizon - duration + 1 - (s - 1) * duration;
    std::int64_t needed = s;
    for (std::int64_t y = 1; y <= slots && needed > 0; ++y) {
      const std::int64_t remaining = slots - y + 1;
      if (static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(remaining))) < needed) {
        onsets.push_back(y + static_cast<std::int64_t>(onsets.size()) * duration);
        --needed;
      }
    }
  }
  return ChangeSchedule(std::move(onsets), duration, horizon);
}

std::vector<double> generate_sequence(const DistributionPair& pair, const ChangeSchedule& schedule,
                                      Rng& rng) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(schedule.horizon()));
  const auto& onsets = schedule.onsets();
  auto next = onsets.begin();
  std::int64_t window_end = 0;
  for (std::int64_t t = 1; t <= schedule.horizon(); ++t) {
    if (next != onsets.end() && *next == t) {
      window_end = t + schedule.duration() - 1;
      ++next;
    }
    const auto which = t <= window_end ? Hypothesis::alternative : Hypothesis::nominal;
    xs.push_back(sample(pair, which, rng));
  }
  return xs;
}

std::int64_t last_onset_at_or_before(const ChangeSchedule& schedule, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("last_onset_at_or_before: t must be >= 1");
  const auto& onsets = schedule.onsets();
  auto it = std::upper_bound(onsets.begin(), onsets.end(), t);
  if (it == onsets.begin()) return 0;
  return std::min(t, *std::prev(it) + schedule.duration() - 1);
}

}  // namespace qsearch
