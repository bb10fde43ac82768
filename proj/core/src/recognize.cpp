#include "viewgen/recognize.hpp"

#include <limits>

#include "viewgen/errors.hpp"

namespace viewgen {

int classify_with(const Scorer& scorer, const FeatureVector& b, std::span<const ModelBaseEntry> base) {
  if (base.empty()) throw InvalidArgument("classify: empty model base");
  int best_id = 0;
  double best = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (const auto& entry : base) {
    if (entry.views.empty())
      throw InvalidArgument("classify: object " + std::to_string(entry.object_id) + " has no views");
    double s = -std::numeric_limits<double>::infinity();
    for (const auto& t : entry.views) s = std::max(s, scorer(b, t));
    if (!have || s > best || (s == best && entry.object_id < best_id)) {
      best = s;
      best_id = entry.object_id;
      have = true;
    }
  }
  return best_id;
}

}  // namespace viewgen
