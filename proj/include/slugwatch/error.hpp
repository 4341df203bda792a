// Copyright 2026 The Slugwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SLUGWATCH_ERROR_HPP_
#define SLUGWATCH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace slugwatch {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kNotFound,
  kIntegrity,
  kConflict,
  kIo,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIntegrity: return "integrity_error";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

/// Base exception for every library failure. The code drives CLI exit
/// statuses and HTTP response codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error invalid_argument(const std::string& message) {
  return Error(ErrorCode::kInvalidArgument, message);
}

inline Error not_found(const std::string& message) {
  return Error(ErrorCode::kNotFound, message);
}

}  // namespace slugwatch

#endif  // SLUGWATCH_ERROR_HPP_
