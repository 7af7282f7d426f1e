#include "qsearch/stopping_rule.hpp"

#include <sstream>
#include <stdexcept>

namespace qsearch {

std::string ShewhartRule::name() const {
  std::ostringstream out;
  out << "shewhart(eta=" << detector_.eta() << ")";
  return out.str();
}

FixedTimeRule::FixedTimeRule(std::int64_t k) : k_(k) {
  if (k < 1) throw std::invalid_argument("FixedTimeRule: k must be at least 1");
}

BernoulliStopRule::BernoulliStopRule(double q) : q_(q) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("BernoulliStopRule: q must lie in (0, 1]");
}

std::string BernoulliStopRule::name() const {
  std::ostringstream out;
  out << "bernoulli(q=" << q_ << ")";
  return out.str();
}

}  // namespace qsearch
