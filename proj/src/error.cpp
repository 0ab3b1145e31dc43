#include "dmca/error.hpp"

namespace dmca {

const char* parse_error_kind_name(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::Empty:
      return "empty";
    case ParseError::Kind::UnbalancedParenthesis:
      return "unbalanced-parenthesis";
    case ParseError::Kind::UnmatchedRingClosure:
      return "unmatched-ring-closure";
    case ParseError::Kind::UnknownAtom:
      return "unknown-atom";
    case ParseError::Kind::DanglingBond:
      return "dangling-bond";
    case ParseError::Kind::Syntax:
      return "syntax";
  }
  return "unknown";
}

}  // namespace dmca
