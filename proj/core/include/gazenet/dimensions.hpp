#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gazenet {

enum class Category { kObjective, kSubjective };

struct DimensionSpec {
  int id;
  std::string_view name;
  std::string_view negative_pole;
  std::string_view positive_pole;
  Category category;
  bool excluded;
};

inline constexpr std::size_t kNumTasks = 15;
inline constexpr std::size_t kNumObjective = 4;
inline constexpr std::size_t kNumSubjective = 11;

// Full rating registry: the 15 active dimensions (ids 0..14, objective first)
// followed by the three low-variance dimensions that are never modeled.
std::span<const DimensionSpec> dimension_registry();

// Active dimensions only, indexed by id.
std::span<const DimensionSpec> active_dimensions();

const DimensionSpec& dimension(int id);

// Looks up by name; throws ValidationError for unknown names and for the
// excluded dimensions.
const DimensionSpec& active_dimension_by_name(std::string_view name);

// Ids of the active dimensions in `category`, ascending.
std::vector<int> dimensions_in(Category category);

// Throws ValidationError unless `id` names an active dimension.
void require_active(int id);

std::string_view to_string(Category category);

}  // namespace gazenet
