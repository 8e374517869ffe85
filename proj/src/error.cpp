#include "mthinker/error.hpp"

namespace mthinker {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::empty_text: return "EMPTY_TEXT";
    case Errc::bad_format: return "BAD_FORMAT";
    case Errc::not_found: return "NOT_FOUND";
    case Errc::empty_input: return "EMPTY_INPUT";
    case Errc::parse_failed: return "PARSE_FAILED";
    case Errc::judge_unreachable: return "JUDGE_UNREACHABLE";
    case Errc::group_too_small: return "GROUP_TOO_SMALL";
    case Errc::non_finite: return "NON_FINITE";
    case Errc::unset_advantages: return "UNSET_ADVANTAGES";
    case Errc::backend_failure: return "BACKEND_FAILURE";
    case Errc::timeout: return "TIMEOUT";
    case Errc::empty_subset: return "EMPTY_SUBSET";
    case Errc::out_of_range: return "OUT_OF_RANGE";
    case Errc::forge_empty: return "FORGE_EMPTY";
    case Errc::trainer_failure: return "TRAINER_FAILURE";
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
    case Errc::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace mthinker
