#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>

#include "dmca/chem/elements.hpp"
#include "dmca/chem/molecule.hpp"
#include "dmca/error.hpp"

namespace dmca::chem {
namespace {

constexpr long kHydrogenSlot = -1;

struct PendingBond {
  BondOrder order;
  std::size_t offset;
};

struct OpenRing {
  std::size_t atom;
  std::optional<BondOrder> order;
  std::size_t offset;
  /// Index into the opening atom's neighbor list reserved for the partner.
  std::size_t slot;
};

struct BranchFrame {
  std::size_t atom;
  std::size_t offset;
  bool has_atom = false;
};

bool is_bond_char(char c) { return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\'; }

BondOrder bond_order_of(char c) {
  switch (c) {
    case '=':
      return BondOrder::Double;
    case '#':
      return BondOrder::Triple;
    case ':':
      return BondOrder::Aromatic;
    default:
      return BondOrder::Single;
  }
}

/// Parity of the permutation taking `from` to `to` (same elements), via inversion count.
bool odd_permutation(const std::vector<long>& from, const std::vector<long>& to) {
  std::vector<std::size_t> positions;
  for (long v : to) {
    positions.push_back(static_cast<std::size_t>(std::find(from.begin(), from.end(), v) - from.begin()));
  }
  std::size_t inversions = 0;
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (positions[i] > positions[j]) ++inversions;
  return inversions % 2 == 1;
}

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : s_(text) {}

  ParsedMolecule run() {
    if (s_.empty()) throw ParseError(ParseError::Kind::Empty, 0, "empty SMILES string");
    while (pos_ < s_.size()) step();
    finish();
    return std::move(mol_);
  }

 private:
  void step() {
    const char c = s_[pos_];
    if (c == '(') {
      open_branch();
    } else if (c == ')') {
      close_branch();
    } else if (is_bond_char(c)) {
      if (pending_) throw ParseError(ParseError::Kind::Syntax, pos_, "two consecutive bond symbols");
      if (!prev_) throw ParseError(ParseError::Kind::DanglingBond, pos_, "bond symbol without a preceding atom");
      pending_ = PendingBond{bond_order_of(c), pos_};
      ++pos_;
    } else if (c == '.') {
      if (pending_) throw dangling();
      if (!prev_) throw ParseError(ParseError::Kind::Syntax, pos_, "'.' without a preceding atom");
      prev_.reset();
      ++pos_;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
      ring_closure();
    } else if (c == '[') {
      bracket_atom();
    } else {
      organic_atom();
    }
  }

  ParseError dangling() const {
    return ParseError(ParseError::Kind::DanglingBond, pending_->offset, "bond symbol not followed by an atom");
  }

  void open_branch() {
    if (pending_) throw dangling();
    if (!prev_) throw ParseError(ParseError::Kind::Syntax, pos_, "branch without a preceding atom");
    branches_.push_back({*prev_, pos_});
    ++pos_;
  }

  void close_branch() {
    if (branches_.empty()) throw ParseError(ParseError::Kind::UnbalancedParenthesis, pos_, "unmatched ')'");
    if (pending_) throw dangling();
    if (!branches_.back().has_atom) throw ParseError(ParseError::Kind::Syntax, pos_, "empty branch");
    prev_ = branches_.back().atom;
    branches_.pop_back();
    ++pos_;
  }

  void ring_closure() {
    const std::size_t start = pos_;
    int number = 0;
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() + 0 || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
        throw ParseError(ParseError::Kind::Syntax, pos_, "'%' must be followed by two digits");
      }
      number = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = s_[pos_] - '0';
      ++pos_;
    }
    if (!prev_) throw ParseError(ParseError::Kind::Syntax, start, "ring closure without a preceding atom");
    const std::size_t atom = *prev_;
    std::optional<BondOrder> order;
    if (pending_) order = pending_->order;
    pending_.reset();

    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      neighbors_[atom].push_back(0);  // filled when the ring closes
      open_rings_[number] = OpenRing{atom, order, start, neighbors_[atom].size() - 1};
      return;
    }
    const OpenRing ring = it->second;
    open_rings_.erase(it);
    if (ring.atom == atom) throw ParseError(ParseError::Kind::Syntax, start, "ring closure bonds an atom to itself");
    if (ring.order && order && *ring.order != *order) {
      throw ParseError(ParseError::Kind::Syntax, start, "conflicting ring-closure bond orders");
    }
    if (bonded(ring.atom, atom)) throw ParseError(ParseError::Kind::Syntax, start, "duplicate bond via ring closure");
    const BondOrder resolved = order ? *order : (ring.order ? *ring.order : default_order(ring.atom, atom));
    mol_.bonds.push_back({ring.atom, atom, resolved});
    neighbors_[ring.atom][ring.slot] = static_cast<long>(atom);
    neighbors_[atom].push_back(static_cast<long>(ring.atom));
    ring_partners_[ring.atom].push_back(static_cast<long>(atom));
    ring_partners_[atom].push_back(static_cast<long>(ring.atom));
  }

  void organic_atom() {
    const std::size_t start = pos_;
    const char c = s_[pos_];
    ParsedAtom atom;
    atom.offset = start;
    std::string_view symbol;
    switch (c) {
      case 'B':
        symbol = (pos_ + 1 < s_.size() && s_[pos_ + 1] == 'r') ? "Br" : "B";
        break;
      case 'C':
        symbol = (pos_ + 1 < s_.size() && s_[pos_ + 1] == 'l') ? "Cl" : "C";
        break;
      case 'N':
      case 'O':
      case 'P':
      case 'S':
      case 'F':
      case 'I':
        symbol = s_.substr(pos_, 1);
        break;
      case 'b':
      case 'c':
      case 'n':
      case 'o':
      case 'p':
      case 's':
        symbol = s_.substr(pos_, 1);
        atom.aromatic = true;
        break;
      default:
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '*') {
          throw ParseError(ParseError::Kind::UnknownAtom, start,
                           "unknown atom symbol '" + std::string(1, c) + "' outside brackets");
        }
        throw ParseError(ParseError::Kind::Syntax, start, "unexpected character '" + std::string(1, c) + "'");
    }
    pos_ += symbol.size();
    std::string upper(symbol);
    upper[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(upper[0])));
    atom.atomic_number = *atomic_number(upper);
    add_atom(atom);
  }

  void bracket_atom() {
    const std::size_t open = pos_;
    ++pos_;
    ParsedAtom atom;
    atom.bracket = true;
    atom.offset = open;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      atom.isotope = atom.isotope * 10 + (s_[pos_] - '0');
      ++pos_;
    }
    if (pos_ >= s_.size()) throw ParseError(ParseError::Kind::Syntax, pos_, "unterminated bracket atom");
    const std::size_t symbol_at = pos_;
    const char first = s_[pos_];
    if (std::isupper(static_cast<unsigned char>(first))) {
      std::optional<int> z;
      if (pos_ + 1 < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_ + 1]))) {
        z = atomic_number(s_.substr(pos_, 2));
        if (z) pos_ += 2;
      }
      if (!z) {
        z = atomic_number(s_.substr(pos_, 1));
        if (!z) {
          throw ParseError(ParseError::Kind::UnknownAtom, symbol_at, "unknown element in bracket atom");
        }
        pos_ += 1;
      }
      atom.atomic_number = *z;
    } else if (std::islower(static_cast<unsigned char>(first))) {
      static constexpr std::pair<std::string_view, int> kAromatic[] = {
          {"se", 34}, {"as", 33}, {"te", 52}, {"b", 5}, {"c", 6}, {"n", 7}, {"o", 8}, {"p", 15}, {"s", 16}};
      bool matched = false;
      for (const auto& [sym, z] : kAromatic) {
        if (s_.substr(pos_, sym.size()) == sym) {
          atom.atomic_number = z;
          atom.aromatic = true;
          pos_ += sym.size();
          matched = true;
          break;
        }
      }
      if (!matched) throw ParseError(ParseError::Kind::UnknownAtom, symbol_at, "unknown aromatic symbol in bracket atom");
    } else {
      throw ParseError(ParseError::Kind::UnknownAtom, symbol_at, "missing element symbol in bracket atom");
    }

    if (pos_ < s_.size() && s_[pos_] == '@') {
      ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '@') {
        atom.chirality = Chirality::CW;
        ++pos_;
      } else if (pos_ + 1 < s_.size() && is_chirality_class(s_.substr(pos_, 2))) {
        atom.chirality = Chirality::Other;
        pos_ += 2;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        atom.chirality = Chirality::CCW;
      }
    }
    if (pos_ < s_.size() && s_[pos_] == 'H') {
      ++pos_;
      atom.explicit_hs = 1;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        atom.explicit_hs = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          atom.explicit_hs = atom.explicit_hs * 10 + (s_[pos_] - '0');
          ++pos_;
        }
      }
    }
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const char sign = s_[pos_];
      const int unit = sign == '+' ? 1 : -1;
      ++pos_;
      int magnitude = 1;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        magnitude = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          magnitude = magnitude * 10 + (s_[pos_] - '0');
          ++pos_;
        }
      } else {
        while (pos_ < s_.size() && s_[pos_] == sign) {
          ++magnitude;
          ++pos_;
        }
      }
      atom.formal_charge = unit * magnitude;
    }
    if (pos_ < s_.size() && s_[pos_] == ':') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ >= s_.size() || s_[pos_] != ']') {
      throw ParseError(ParseError::Kind::Syntax, pos_, "expected ']' to close bracket atom opened at " + std::to_string(open));
    }
    ++pos_;
    add_atom(atom);
  }

  static bool is_chirality_class(std::string_view two) {
    return two == "TH" || two == "AL" || two == "SP" || two == "TB" || two == "OH";
  }

  BondOrder default_order(std::size_t a, std::size_t b) const {
    return mol_.atoms[a].aromatic && mol_.atoms[b].aromatic ? BondOrder::Aromatic : BondOrder::Single;
  }

  bool bonded(std::size_t a, std::size_t b) const {
    return std::any_of(mol_.bonds.begin(), mol_.bonds.end(), [&](const Bond& bond) {
      return (bond.begin == a && bond.end == b) || (bond.begin == b && bond.end == a);
    });
  }

  void add_atom(const ParsedAtom& atom) {
    const std::size_t index = mol_.atoms.size();
    mol_.atoms.push_back(atom);
    neighbors_.emplace_back();
    ring_partners_.emplace_back();
    if (prev_) {
      const BondOrder order = pending_ ? pending_->order : default_order(*prev_, index);
      mol_.bonds.push_back({*prev_, index, order});
      neighbors_[*prev_].push_back(static_cast<long>(index));
      neighbors_[index].push_back(static_cast<long>(*prev_));
    }
    if (atom.explicit_hs > 0) neighbors_[index].push_back(kHydrogenSlot);
    pending_.reset();
    prev_ = index;
    if (!branches_.empty()) branches_.back().has_atom = true;
  }

  void finish() {
    if (pending_) throw dangling();
    if (!branches_.empty()) {
      throw ParseError(ParseError::Kind::UnbalancedParenthesis, s_.size(),
                       "unclosed '(' opened at offset " + std::to_string(branches_.back().offset));
    }
    if (!open_rings_.empty()) {
      std::size_t first = s_.size();
      for (const auto& [number, ring] : open_rings_) first = std::min(first, ring.offset);
      throw ParseError(ParseError::Kind::UnmatchedRingClosure, first, "ring-closure digit is never closed");
    }
    if (mol_.atoms.empty()) throw ParseError(ParseError::Kind::Empty, 0, "SMILES contains no atoms");
    normalize_chirality();
  }

  /// Re-expresses @/@@ relative to the molecule's bond order: chain and branch neighbors in
  /// order of appearance, an implicit hydrogen in second position, ring-closure partners last
  /// in closure order. Written order is: preceding atom, hydrogen, ring digits, then branches.
  void normalize_chirality() {
    for (std::size_t a = 0; a < mol_.atoms.size(); ++a) {
      ParsedAtom& atom = mol_.atoms[a];
      if (atom.chirality != Chirality::CW && atom.chirality != Chirality::CCW) continue;
      const std::vector<long>& written = neighbors_[a];
      std::vector<long> canonical;
      for (long n : written) {
        if (n == kHydrogenSlot) continue;
        if (std::find(ring_partners_[a].begin(), ring_partners_[a].end(), n) != ring_partners_[a].end()) continue;
        canonical.push_back(n);
      }
      if (atom.explicit_hs > 0) {
        canonical.insert(canonical.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(1, canonical.size())),
                         kHydrogenSlot);
      }
      canonical.insert(canonical.end(), ring_partners_[a].begin(), ring_partners_[a].end());
      if (odd_permutation(written, canonical)) {
        atom.chirality = atom.chirality == Chirality::CW ? Chirality::CCW : Chirality::CW;
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  ParsedMolecule mol_;
  std::optional<std::size_t> prev_;
  std::optional<PendingBond> pending_;
  std::vector<BranchFrame> branches_;
  std::map<int, OpenRing> open_rings_;
  /// Neighbors of each atom in written order; kHydrogenSlot marks a bracket hydrogen.
  std::vector<std::vector<long>> neighbors_;
  /// Ring-closure partners of each atom in closure order.
  std::vector<std::vector<long>> ring_partners_;
};

}  // namespace

ParsedMolecule parse_smiles(std::string_view smiles) { return SmilesParser(smiles).run(); }

std::vector<std::vector<std::size_t>> ParsedMolecule::incident_bonds() const {
  std::vector<std::vector<std::size_t>> incident(atoms.size());
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    incident[bonds[b].begin].push_back(b);
    incident[bonds[b].end].push_back(b);
  }
  return incident;
}

}  // namespace dmca::chem
