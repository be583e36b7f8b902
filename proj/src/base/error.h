// base/error.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_BASE_ERROR_H_
#define CSFNET_BASE_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace csfnet {

// Bad argument values: empty waveforms, wrong frame sizes, mismatched lengths.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration that violates its own invariants (C % 4 != 0, N not
// dividing the embedding width, F not matching the STFT config, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A source that is all zeros and therefore has no defined power.
class DegenerateSource : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Non-finite loss during training.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {

template <typename... Args>
std::string Concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace internal

#define CSF_CHECK_INPUT(cond, ...)                                      \
  do {                                                                  \
    if (!(cond))                                                        \
      throw ::csfnet::InvalidInput(::csfnet::internal::Concat(__VA_ARGS__)); \
  } while (0)

#define CSF_CHECK_CONFIG(cond, ...)                                     \
  do {                                                                  \
    if (!(cond))                                                        \
      throw ::csfnet::ConfigError(::csfnet::internal::Concat(__VA_ARGS__)); \
  } while (0)

}  // namespace csfnet

#endif  // CSFNET_BASE_ERROR_H_
