#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dcndp {

enum class Rha : std::uint8_t { East = 0, Central = 1, West = 2, LaGr = 3 };

inline constexpr std::array<Rha, 4> kAllRhas = {Rha::East, Rha::Central, Rha::West, Rha::LaGr};

std::string_view to_string(Rha rha);
std::optional<Rha> parse_rha(std::string_view text);

/// Per-person record attached to a contact-network node.
struct NodeAttributes {
  int age = 0;
  std::optional<Rha> rha;
  bool is_healthcare_worker = false;
  bool is_urgent_care_patient = false;
  bool is_long_term_care = false;
  std::int64_t household_id = -1;
  std::optional<std::int64_t> workplace_id;
  std::optional<std::int64_t> school_id;

  bool operator==(const NodeAttributes&) const = default;
};

/// School only for ages 4..22, never both school and workplace, always a household.
bool satisfies_invariants(const NodeAttributes& a);

}  // namespace dcndp
