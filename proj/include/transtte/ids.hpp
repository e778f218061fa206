#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace transtte {

template <typename Tag>
struct Id {
  std::int64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::int64_t v) : value(v) {}
  constexpr auto operator<=>(const Id&) const = default;

  friend std::ostream& operator<<(std::ostream& os, Id id) { return os << id.value; }
};

using NodeId = Id<struct NodeTag>;
using SegmentId = Id<struct SegmentTag>;
using TripId = Id<struct TripTag>;
using PoiId = Id<struct PoiTag>;

}  // namespace transtte

template <typename Tag>
struct std::hash<transtte::Id<Tag>> {
  std::size_t operator()(transtte::Id<Tag> id) const noexcept {
    return std::hash<std::int64_t>{}(id.value);
  }
};
