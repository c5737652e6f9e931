#pragma once

#include <stdexcept>
#include <string>

namespace pk {

enum class Errc {
  parse_error,
  unknown_reference,
  not_a_face_path,
  uncovered_edge_side,
  disconnected,
  precondition_violated,
  invalid_site,
  non_integer_genus,
  singular_pairing,
  factorization_failed,
  log_out_of_range,
  invalid_path,
  not_a_site,
  not_in_plus_subgroup,
  not_in_minus_subgroup,
  no_free_site,
  move_replay,
  not_flat,
  not_paired,
  no_unique_solution,
  hypothesis_unmet,
  dimension_mismatch,
  not_closed,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::parse_error: return "ParseError";
    case Errc::unknown_reference: return "UnknownReference";
    case Errc::not_a_face_path: return "NotAFacePath";
    case Errc::uncovered_edge_side: return "UncoveredEdgeSide";
    case Errc::disconnected: return "Disconnected";
    case Errc::precondition_violated: return "PreconditionViolated";
    case Errc::invalid_site: return "InvalidSite";
    case Errc::non_integer_genus: return "NonIntegerGenus";
    case Errc::singular_pairing: return "SingularPairing";
    case Errc::factorization_failed: return "FactorizationFailed";
    case Errc::log_out_of_range: return "LogOutOfRange";
    case Errc::invalid_path: return "InvalidPath";
    case Errc::not_a_site: return "NotASite";
    case Errc::not_in_plus_subgroup: return "NotInPlusSubgroup";
    case Errc::not_in_minus_subgroup: return "NotInMinusSubgroup";
    case Errc::no_free_site: return "NoFreeSite";
    case Errc::move_replay: return "MoveReplayError";
    case Errc::not_flat: return "NotFlat";
    case Errc::not_paired: return "NotPaired";
    case Errc::no_unique_solution: return "NoUniqueSolution";
    case Errc::hypothesis_unmet: return "HypothesisUnmet";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::not_closed: return "NotClosed";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pk
