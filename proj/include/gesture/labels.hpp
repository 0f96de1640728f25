#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gesture {

using LabelId = int;

// Collapsed Other/None class used by the temporal gate and the engine.
inline constexpr LabelId kNegativeLabel = -1;

enum class HeadKind { Localization, Caption, Pinch, None };

std::string_view to_string(HeadKind kind);

namespace labels {
inline constexpr LabelId Point = 0;
inline constexpr LabelId Drag = 1;
inline constexpr LabelId Loupe = 2;
inline constexpr LabelId Pinch = 3;
inline constexpr LabelId Other = 4;
inline constexpr LabelId None = 5;
}  // namespace labels

// Gesture vocabulary. New labels append; indices of existing labels never move.
class LabelRegistry {
 public:
  struct Entry {
    std::string name;
    bool negative = false;
    HeadKind head = HeadKind::None;
  };

  // Point, Drag, Loupe, Pinch, Other, None with their head bindings.
  static LabelRegistry standard();

  LabelId add(std::string name, bool negative, HeadKind head);

  std::size_t size() const { return entries_.size(); }
  bool contains(LabelId id) const { return id >= 0 && static_cast<std::size_t>(id) < entries_.size(); }
  const Entry& entry(LabelId id) const;
  const std::string& name(LabelId id) const { return entry(id).name; }
  bool is_negative(LabelId id) const { return entry(id).negative; }
  std::optional<LabelId> find(std::string_view name) const;
  LabelId parse(std::string_view name) const;

  // Maps negative labels onto kNegativeLabel, everything else to itself.
  LabelId collapse(LabelId id) const { return is_negative(id) ? kNegativeLabel : id; }
  std::string display_name(LabelId collapsed) const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace gesture
