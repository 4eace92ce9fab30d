#include "gazenet/dimensions.hpp"

#include <string>

#include "gazenet/error.hpp"

namespace gazenet {
namespace {

constexpr std::array<DimensionSpec, 18> kRegistry{{
    {0, "light", "dark", "light", Category::kObjective, false},
    {1, "complexity", "simple", "complex", Category::kObjective, false},
    {2, "organization", "disordered", "organized", Category::kObjective, false},
    {3, "naturalness", "artificial", "natural", Category::kObjective, false},
    {4, "color_comfort", "uncomfortable colors", "comfortable colors", Category::kSubjective, false},
    {5, "interest", "boring", "interesting", Category::kSubjective, false},
    {6, "valence", "unpleasant", "pleasant", Category::kSubjective, false},
    {7, "stimulation", "calming", "stimulating", Category::kSubjective, false},
    {8, "vitality", "lifeless", "lively", Category::kSubjective, false},
    {9, "comfort", "uncomfortable", "comfortable", Category::kSubjective, false},
    {10, "relaxation", "tense", "relaxed", Category::kSubjective, false},
    {11, "hominess", "not homey", "homey", Category::kSubjective, false},
    {12, "uplift", "depressing", "uplifting", Category::kSubjective, false},
    {13, "approachability", "leave", "enter", Category::kSubjective, false},
    {14, "explorability", "not worth exploring", "worth exploring", Category::kSubjective, false},
    // Too little variability across stimuli; kept only so ratings files can name them.
    {15, "beauty", "ugly", "beautiful", Category::kSubjective, true},
    {16, "personalness", "impersonal", "personal", Category::kSubjective, true},
    {17, "modernity", "aged", "modern", Category::kSubjective, true},
}};

}  // namespace

std::span<const DimensionSpec> dimension_registry() { return kRegistry; }

std::span<const DimensionSpec> active_dimensions() {
  return std::span<const DimensionSpec>(kRegistry).first(kNumTasks);
}

const DimensionSpec& dimension(int id) {
  if (id < 0 || id >= static_cast<int>(kRegistry.size())) {
    throw ValidationError("unknown dimension id " + std::to_string(id));
  }
  return kRegistry[static_cast<std::size_t>(id)];
}

const DimensionSpec& active_dimension_by_name(std::string_view name) {
  for (const auto& d : kRegistry) {
    if (d.name == name) {
      if (d.excluded) {
        throw ValidationError("dimension '" + std::string(name) + "' is excluded from modeling");
      }
      return d;
    }
  }
  throw ValidationError("unknown dimension '" + std::string(name) + "'");
}

std::vector<int> dimensions_in(Category category) {
  std::vector<int> ids;
  for (const auto& d : active_dimensions()) {
    if (d.category == category) ids.push_back(d.id);
  }
  return ids;
}

void require_active(int id) {
  if (dimension(id).excluded) {
    throw ValidationError("dimension " + std::string(dimension(id).name) +
                          " is excluded from modeling");
  }
}

std::string_view to_string(Category category) {
  return category == Category::kObjective ? "objective" : "subjective";
}

}  // namespace gazenet
