#pragma once

#include <stdexcept>

namespace rehearsal {

/// Filesystem or stream failure (missing file, short write). The CLI maps
/// it to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rehearsal
