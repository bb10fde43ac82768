#pragma once

// Recognition against a model base: argmax over objects of the best score
// among that object's stored training views.

#include <functional>
#include <span>
#include <vector>

#include "viewgen/encode.hpp"

namespace viewgen {

/// Higher score means "more likely the same object". Only the ordering of
/// scores matters to every consumer.
using Scorer = std::function<double(const FeatureVector& b, const FeatureVector& t)>;

struct ModelBaseEntry {
  int object_id = 0;
  std::vector<FeatureVector> views;
};

struct Probe {
  int object_id = 0;
  FeatureVector view;
};

/// Object whose best-matching view scores highest; ties go to the lowest
/// object id. Throws InvalidArgument on an empty base or an object without
/// views.
int classify_with(const Scorer& scorer, const FeatureVector& b, std::span<const ModelBaseEntry> base);

}  // namespace viewgen
