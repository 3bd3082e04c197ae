#ifndef CBD_ERROR_HPP
#define CBD_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbd {

/// Machine-readable failure codes shared by the whole library.
enum class Errc {
  parse_error,         // malformed number, JSON shape, or CLI input
  non_normalized,      // bunch masses do not sum to one
  negative_mass,       // proper distribution carries a negative mass
  bad_outcome,         // outcome tuple inconsistent with its value sets
  duplicate_cell,      // same content listed twice in one context
  duplicate_context,   // same context id defined twice
  duplicate_content,   // same content id listed twice
  duplicate_label,     // same label twice in one value set
  empty_system,        // no contexts, no contents, or an empty bunch
  empty_value_set,     // value set with no labels
  orphan_content,      // content that appears in no context, or vice versa
  missing_value_set,   // content used in a bunch but given no value set
  unknown_content,     // lookup of a content id that does not exist
  unknown_context,     // lookup of a context id that does not exist
  unknown_cell,        // content/context pair not present in the system
  value_set_mismatch,  // distributions over differently sized value sets
  not_binary,          // operation requires two-valued contents
  marginal_mismatch,   // coupling marginals disagree with the given ones
  invalid_rank,        // cyclic system rank below three
  invalid_split,       // dichotomization split empty or full
  invalid_partition,   // coarse-graining classes do not partition values
  dimension_mismatch,  // vector/matrix sizes disagree, or contradictory bounds
  too_large,           // enumeration would exceed the configured budget
  internal,            // invariant violation inside the library
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::parse_error: return "parse_error";
    case Errc::non_normalized: return "non_normalized";
    case Errc::negative_mass: return "negative_mass";
    case Errc::bad_outcome: return "bad_outcome";
    case Errc::duplicate_cell: return "duplicate_cell";
    case Errc::duplicate_context: return "duplicate_context";
    case Errc::duplicate_content: return "duplicate_content";
    case Errc::duplicate_label: return "duplicate_label";
    case Errc::empty_system: return "empty_system";
    case Errc::empty_value_set: return "empty_value_set";
    case Errc::orphan_content: return "orphan_content";
    case Errc::missing_value_set: return "missing_value_set";
    case Errc::unknown_content: return "unknown_content";
    case Errc::unknown_context: return "unknown_context";
    case Errc::unknown_cell: return "unknown_cell";
    case Errc::value_set_mismatch: return "value_set_mismatch";
    case Errc::not_binary: return "not_binary";
    case Errc::marginal_mismatch: return "marginal_mismatch";
    case Errc::invalid_rank: return "invalid_rank";
    case Errc::invalid_split: return "invalid_split";
    case Errc::invalid_partition: return "invalid_partition";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::too_large: return "too_large";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

/// Exception carrying an Errc plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// One finding from validation; `where` names the offending part.
struct Issue {
  Errc code;
  std::string where;
  std::string detail;
};

}  // namespace cbd

#endif  // CBD_ERROR_HPP
