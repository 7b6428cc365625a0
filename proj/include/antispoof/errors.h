#ifndef ANTISPOOF_ERRORS_H_
#define ANTISPOOF_ERRORS_H_

#include <stdexcept>
#include <string>

namespace antispoof {

// Malformed or unsupported file contents (WAV, feature, checkpoint, score files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input shorter than the analysis requires.
class InputTooShortError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// LabeledUtterance invariant violated.
class LabelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline stage was run before the stage producing its inputs.
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace antispoof

#endif  // ANTISPOOF_ERRORS_H_
