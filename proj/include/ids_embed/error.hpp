#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The ids-embed Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <stdexcept>
#include <string>

namespace ids_embed {

enum class ErrorCode
{
  Io,
  EmptyInput,
  MalformedLine,
  UnknownToken,
  DuplicateItem,
  InvalidArgument,
  IndexOutOfRange,
  DimensionMismatch,
  IncompleteBundle,
  NoKnownAttributes,
  NoKnownItems,
  ZeroVector,
  NonFiniteObjective,
  UnknownInteractionKind,
};

inline char const *to_string(ErrorCode code)
{
  switch (code)
  {
  case ErrorCode::Io: return "Io";
  case ErrorCode::EmptyInput: return "EmptyInput";
  case ErrorCode::MalformedLine: return "MalformedLine";
  case ErrorCode::UnknownToken: return "UnknownToken";
  case ErrorCode::DuplicateItem: return "DuplicateItem";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::IncompleteBundle: return "IncompleteBundle";
  case ErrorCode::NoKnownAttributes: return "NoKnownAttributes";
  case ErrorCode::NoKnownItems: return "NoKnownItems";
  case ErrorCode::ZeroVector: return "ZeroVector";
  case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
  case ErrorCode::UnknownInteractionKind: return "UnknownInteractionKind";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, std::string const &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message)
    , code_(code)
  {}

  ErrorCode code() const noexcept
  {
    return code_;
  }

private:
  ErrorCode code_;
};

}  // namespace ids_embed
