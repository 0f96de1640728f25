#include "gesture/labels.hpp"

#include <algorithm>
#include <cctype>

#include "gesture/error.hpp"

namespace gesture {

std::string_view to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::Localization: return "localization";
    case HeadKind::Caption: return "caption";
    case HeadKind::Pinch: return "pinch";
    case HeadKind::None: return "none";
  }
  return "none";
}

LabelRegistry LabelRegistry::standard() {
  LabelRegistry r;
  r.add("Point", false, HeadKind::Localization);
  r.add("Drag", false, HeadKind::Localization);
  r.add("Loupe", false, HeadKind::Caption);
  r.add("Pinch", false, HeadKind::Pinch);
  r.add("Other", true, HeadKind::None);
  r.add("None", true, HeadKind::None);
  return r;
}

LabelId LabelRegistry::add(std::string name, bool negative, HeadKind head) {
  if (name.empty()) throw ParameterError("label name must be non-empty");
  if (find(name)) throw ParameterError("label '" + name + "' already registered");
  if (negative && head != HeadKind::None) throw ParameterError("negative labels cannot bind a head");
  entries_.push_back(Entry{std::move(name), negative, head});
  return static_cast<LabelId>(entries_.size() - 1);
}

const LabelRegistry::Entry& LabelRegistry::entry(LabelId id) const {
  if (!contains(id)) throw ParameterError("unregistered label " + std::to_string(id));
  return entries_[static_cast<std::size_t>(id)];
}

std::optional<LabelId> LabelRegistry::find(std::string_view name) const {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const auto key = lower(name);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (lower(entries_[i].name) == key) return static_cast<LabelId>(i);
  }
  return std::nullopt;
}

LabelId LabelRegistry::parse(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw DataError("unknown gesture label '" + std::string(name) + "'");
}

std::string LabelRegistry::display_name(LabelId collapsed) const {
  return collapsed == kNegativeLabel ? std::string("Negative") : name(collapsed);
}

}  // namespace gesture
