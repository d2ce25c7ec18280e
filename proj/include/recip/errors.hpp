#pragma once

#include <stdexcept>
#include <string>

namespace recip {

enum class ErrorCode {
  kIo = 1,
  kParse = 2,
  kInvalid = 3,
  kMleDoesNotExist = 4,
  kNoConvergence = 5,
  kSingular = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Boundary case: one of the dyad configuration classes is empty and the
// likelihood has no interior maximizer. `dyad_class` names the empty class
// ("null", "asymmetric" or "mutual").
class MleDoesNotExist : public Error {
 public:
  explicit MleDoesNotExist(const std::string& dyad_class)
      : Error(ErrorCode::kMleDoesNotExist,
              "MLE does not exist: no " + dyad_class +
                  " dyads observed (likelihood maximized on the boundary)"),
        dyad_class_(dyad_class) {}

  MleDoesNotExist(const std::string& dyad_class, const std::string& message)
      : Error(ErrorCode::kMleDoesNotExist, message), dyad_class_(dyad_class) {}

  const std::string& dyad_class() const { return dyad_class_; }

 private:
  std::string dyad_class_;
};

}  // namespace recip
