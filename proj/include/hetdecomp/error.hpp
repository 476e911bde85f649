#pragma once

#include <stdexcept>
#include <string>

namespace hetdecomp {

// All library failures surface as Error with a human-readable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hetdecomp
