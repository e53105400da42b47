#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toxlex {

enum class Label : std::size_t {
  kHate,
  kShit,
  kFuck,
  kFool,  // ridicule
  kScum,  // dehumanization
  kSlut,
  kGook,
  kHell,
  kHeil,
  kPlot,  // conspiracy
  kKill,  // incitement to violence
  kIffy,
  kSlur,
  kContext,
};

inline constexpr std::size_t kLabelCount = 14;

// Canonical codes in serialization order.
inline constexpr std::array<std::string_view, kLabelCount> kLabelCodes = {
    "HATE", "SHIT", "FUCK", "FOOL", "SCUM", "SLUT", "GOOK", "HELL", "HEIL", "PLOT", "KILL", "IFFY", "SLUR", "CONTEXT"};

// Long names accepted on input. Only these four have a documented meaning.
inline constexpr std::array<std::pair<std::string_view, Label>, 4> kLabelAliases = {{
    {"RIDICULE", Label::kFool},
    {"DEHUMANIZATION", Label::kScum},
    {"VIOLENCE", Label::kKill},
    {"CONSPIRACY", Label::kPlot},
}};

inline std::optional<Label> label_from_code(std::string_view code) {
  for (std::size_t i = 0; i < kLabelCount; ++i)
    if (kLabelCodes[i] == code) return static_cast<Label>(i);
  for (auto [alias, label] : kLabelAliases)
    if (alias == code) return label;
  return std::nullopt;
}

inline std::string_view label_code(Label l) { return kLabelCodes[static_cast<std::size_t>(l)]; }

class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<Label> labels) {
    for (Label l : labels) set(l);
  }

  bool test(Label l) const { return bits_.test(static_cast<std::size_t>(l)); }
  void set(Label l, bool on = true) { bits_.set(static_cast<std::size_t>(l), on); }
  bool empty() const { return bits_.none(); }
  std::size_t count() const { return bits_.count(); }
  unsigned long to_bits() const { return bits_.to_ulong(); }

  LabelSet& operator|=(const LabelSet& o) {
    bits_ |= o.bits_;
    return *this;
  }
  friend LabelSet operator|(LabelSet a, const LabelSet& b) { return a |= b; }
  bool operator==(const LabelSet&) const = default;

  // Set codes in canonical order.
  std::vector<std::string> codes() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < kLabelCount; ++i)
      if (bits_.test(i)) out.emplace_back(kLabelCodes[i]);
    return out;
  }

 private:
  std::bitset<kLabelCount> bits_;
};

}  // namespace toxlex
