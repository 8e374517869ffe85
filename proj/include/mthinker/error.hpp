#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mthinker {

enum class Errc {
  empty_text,
  bad_format,
  not_found,
  empty_input,
  parse_failed,
  judge_unreachable,
  group_too_small,
  non_finite,
  unset_advantages,
  backend_failure,
  timeout,
  empty_subset,
  out_of_range,
  forge_empty,
  trainer_failure,
  invalid_argument,
  io_error,
};

std::string_view to_string(Errc code);

/// Base error for every module; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mthinker
