#pragma once

#include <stdexcept>
#include <string>

namespace npr {

enum class Errc {
  non_positive_depth,
  pixel_out_of_bounds,
  behind_camera,
  dimension_mismatch,
  missing_features,
  io_error,
  bad_magic,
  version_unsupported,
  corrupt_length,
  empty_cloud,
  weights_not_loaded,
  dim_mismatch,
  zero_quaternion,
  degenerate_quaternion,
  count_mismatch,
  wrong_view_count,
  all_nodes_masked,
  zero_vector,
  shape_mismatch,
  too_small,
  bad_distribution,
  invalid_spec,
  bad_config,
};

const char* errc_name(Errc c);

/// Runtime error carrying a machine-checkable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace npr
