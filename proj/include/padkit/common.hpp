#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace padkit {

/// Bad or unreadable input data (maps to CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Leakage or misuse of a split (maps to CLI exit code 3).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { Train, Val, Test, Unassigned };

inline std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "unassigned") return Split::Unassigned;
  throw DataError("unknown split '" + std::string(s) + "'");
}

enum class Label { Bonafide, Attack };

inline std::string label_name(Label l) { return l == Label::Attack ? "attack" : "bonafide"; }

inline Label parse_label(std::string_view s) {
  if (s == "bonafide") return Label::Bonafide;
  if (s == "attack") return Label::Attack;
  throw DataError("unknown label '" + std::string(s) + "'");
}

}  // namespace padkit
