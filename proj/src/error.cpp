#include "spinread/error.hpp"

namespace spinread {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::DegenerateBoundary: return "degenerate boundary";
    case ErrorKind::DegenerateTraining: return "degenerate training set";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::FitFailure: return "fit failure";
    case ErrorKind::State: return "state error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

void throw_shape(const std::string& what) { throw Error(ErrorKind::Shape, what); }
void throw_domain(const std::string& what) { throw Error(ErrorKind::Domain, what); }
void throw_degenerate_boundary(const std::string& what) {
  throw Error(ErrorKind::DegenerateBoundary, what);
}

}  // namespace spinread
