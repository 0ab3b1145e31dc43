#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmca::chem {

enum class Chirality : std::uint8_t { Unspecified, CW, CCW, Other };
enum class Hybridization : std::uint8_t { S, SP, SP2, SP3, SP3D, SP3D2, Other };
enum class BondOrder : std::uint8_t { Single, Double, Triple, Aromatic };

std::string_view to_string(Chirality c);
std::string_view to_string(Hybridization h);
std::string_view to_string(BondOrder b);

/// Number of node features per atom.
inline constexpr std::size_t kAtomFeatureCount = 9;

/// The nine per-atom node features, in model input order.
struct AtomFeatures {
  int atomic_number = 0;
  Chirality chirality = Chirality::Unspecified;
  int degree = 0;
  int formal_charge = 0;
  int num_hs = 0;
  int radical_electrons = 0;
  Hybridization hybridization = Hybridization::Other;
  bool is_aromatic = false;
  bool in_ring = false;

  /// Numeric encoding: integers as-is, enums by ordinal, flags as 0/1.
  std::array<double, kAtomFeatureCount> to_vector() const;

  bool operator==(const AtomFeatures&) const = default;
};

struct Bond {
  std::size_t begin = 0;
  std::size_t end = 0;
  BondOrder order = BondOrder::Single;

  bool operator==(const Bond&) const = default;
};

struct MolecularGraph {
  std::vector<AtomFeatures> atoms;
  std::vector<Bond> bonds;
  std::string source_smiles;

  std::size_t atom_count() const noexcept { return atoms.size(); }
  /// Neighbor lists derived from the (undirected) bond list, ascending.
  std::vector<std::vector<std::size_t>> adjacency() const;
};

/// One atom as written in the SMILES string, before valence perception.
struct ParsedAtom {
  int atomic_number = 0;
  bool aromatic = false;
  bool bracket = false;
  int isotope = 0;
  int formal_charge = 0;
  /// Hydrogens written inside a bracket atom ([NH4+] -> 4); 0 for organic-subset atoms.
  int explicit_hs = 0;
  Chirality chirality = Chirality::Unspecified;
  /// Character offset of the atom's first character.
  std::size_t offset = 0;
};

struct ParsedMolecule {
  std::vector<ParsedAtom> atoms;
  std::vector<Bond> bonds;

  std::vector<std::vector<std::size_t>> incident_bonds() const;
};

/// Parses organic-subset and bracket atoms, bonds (- = # : / \), branches and ring closures
/// (digits and %nn). Slash/backslash markers become single bonds. Throws ParseError.
ParsedMolecule parse_smiles(std::string_view smiles);

/// Cycle membership per atom: true iff the atom has an incident bond that is not a bridge.
std::vector<bool> perceive_rings(std::size_t atom_count, std::span<const Bond> bonds);

/// Hydrogens implied by the valence model for an organic-subset atom (0 for bracket atoms).
/// Aromatic bonds count 1.5 and the per-atom sum is floored. Throws ValenceError when a
/// non-aromatic atom's bonds exceed its largest allowed valence.
int implicit_hydrogens(const ParsedMolecule& mol, std::size_t atom);

/// Valence-derived quantities shared by hybridization and featurization.
struct Perception {
  std::vector<int> total_hs;
  std::vector<int> radical_electrons;
  std::vector<bool> in_ring;
  std::vector<bool> conjugated_bond;
};

Perception perceive(const ParsedMolecule& mol);

/// Orbital hybridization from the steric number (neighbors + hydrogens + lone pairs);
/// aromatic atoms are SP2, and four-orbital atoms with at most three substituents and a
/// conjugated bond are demoted to SP2.
Hybridization hybridization(const ParsedMolecule& mol, const Perception& perception, std::size_t atom);

/// Full pipeline: parse, normalize non-ring aromatic bonds to single, perceive, and emit features.
MolecularGraph featurize(std::string_view smiles);

}  // namespace dmca::chem
