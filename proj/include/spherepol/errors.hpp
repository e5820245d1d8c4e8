#pragma once

#include <stdexcept>

namespace spherepol {

// Paired spectra that do not share a detuning grid.
class InconsistentSpectraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spherepol
