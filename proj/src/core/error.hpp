// Copyright 2026 The VoxTrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace voxtrack {

// Mirrors vxt_status in the public C header; values must stay in sync.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kConfig = 2,
  kShape = 3,
  kIo = 4,
  kFormat = 5,
  kNumeric = 6,
  kUsage = 7,
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define VOXTRACK_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  }

VOXTRACK_DEFINE_ERROR(InvalidArgument, kInvalidArgument);
VOXTRACK_DEFINE_ERROR(ConfigError, kConfig);
VOXTRACK_DEFINE_ERROR(ShapeError, kShape);
VOXTRACK_DEFINE_ERROR(IoError, kIo);
VOXTRACK_DEFINE_ERROR(FormatError, kFormat);
VOXTRACK_DEFINE_ERROR(NumericError, kNumeric);
VOXTRACK_DEFINE_ERROR(UsageError, kUsage);

#undef VOXTRACK_DEFINE_ERROR

}  // namespace voxtrack
