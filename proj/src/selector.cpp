#include "heteroselect/selector.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "heteroselect/errors.hpp"

namespace heteroselect {

void PenaltySpec::validate() const {
  if (!(gamma >= 1.0)) throw InvalidArgument("penalty gamma must be >= 1");
  if (!(theta > 1.0)) throw InvalidArgument("penalty theta must be > 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("penalty epsilon must be > 0");
}

double default_weight(const Model& m, double epsilon) {
  const double dim = static_cast<double>(m.dimension());
  return dim * log_pow(dim, 1.0 + epsilon);
}

double penalty(const Model& m, const PenaltySpec& spec) {
  const double dim = static_cast<double>(m.dimension());
  const double weight = spec.extra_weight ? spec.extra_weight(m) : default_weight(m, spec.epsilon);
  if (!(weight >= 0.0)) throw InvalidArgument("penalty weight must be nonnegative");
  return spec.gamma * spec.theta * dim + weight;
}

std::size_t argmin_criterion(std::span<const Model> models, std::span<const double> criteria) {
  if (models.empty()) throw EmptyCollection("cannot select from an empty collection");
  if (models.size() != criteria.size()) throw InvalidArgument("argmin: length mismatch");
  std::size_t best = 0;
  for (std::size_t i = 1; i < criteria.size(); ++i) {
    if (criteria[i] < criteria[best] ||
        (criteria[i] == criteria[best] && canonical_less(models[i], models[best]))) {
      best = i;
    }
  }
  return best;
}

SelectionResult select(std::span<const Model> collection, const Observations& obs,
                       const PenaltySpec& spec) {
  if (collection.empty()) throw EmptyCollection("cannot select from an empty collection");
  spec.validate();
  obs.validate();

  std::vector<CriterionEntry> audit;
  audit.reserve(collection.size());
  std::vector<double> criteria;
  criteria.reserve(collection.size());
  std::optional<Estimate> best_estimate;
  std::size_t best = 0;

  for (std::size_t i = 0; i < collection.size(); ++i) {
    const Model& m = collection[i];
    if (m.n() != obs.n()) {
      throw InvalidArgument("model built for n = " + std::to_string(m.n()) +
                            " but observations have length " + std::to_string(obs.n()));
    }
    auto est = fit(m, obs);
    const double lik = log_likelihood(obs.y1, est.mean, est.variance);
    const double pen = penalty(m, spec);
    const double crit = lik + pen;
    audit.push_back(CriterionEntry{m, lik, pen, crit});
    criteria.push_back(crit);
    // Same scan as argmin_criterion, done incrementally to keep one estimate.
    if (i == 0 || crit < criteria[best] ||
        (crit == criteria[best] && canonical_less(m, collection[best]))) {
      best = i;
      best_estimate = std::move(est);
    }
  }

  return SelectionResult{collection[best], best, std::move(*best_estimate), criteria[best],
                         std::move(audit)};
}

}  // namespace heteroselect
