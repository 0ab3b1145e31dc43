#include "dmca/chem/molecule.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "dmca/chem/elements.hpp"
#include "dmca/error.hpp"

namespace dmca::chem {

std::string_view to_string(Chirality c) {
  switch (c) {
    case Chirality::Unspecified:
      return "Unspecified";
    case Chirality::CW:
      return "CW";
    case Chirality::CCW:
      return "CCW";
    case Chirality::Other:
      return "Other";
  }
  return "?";
}

std::string_view to_string(Hybridization h) {
  switch (h) {
    case Hybridization::S:
      return "S";
    case Hybridization::SP:
      return "SP";
    case Hybridization::SP2:
      return "SP2";
    case Hybridization::SP3:
      return "SP3";
    case Hybridization::SP3D:
      return "SP3D";
    case Hybridization::SP3D2:
      return "SP3D2";
    case Hybridization::Other:
      return "Other";
  }
  return "?";
}

std::string_view to_string(BondOrder b) {
  switch (b) {
    case BondOrder::Single:
      return "Single";
    case BondOrder::Double:
      return "Double";
    case BondOrder::Triple:
      return "Triple";
    case BondOrder::Aromatic:
      return "Aromatic";
  }
  return "?";
}

std::array<double, kAtomFeatureCount> AtomFeatures::to_vector() const {
  return {static_cast<double>(atomic_number),  static_cast<double>(chirality),
          static_cast<double>(degree),         static_cast<double>(formal_charge),
          static_cast<double>(num_hs),         static_cast<double>(radical_electrons),
          static_cast<double>(hybridization),  is_aromatic ? 1.0 : 0.0,
          in_ring ? 1.0 : 0.0};
}

std::vector<std::vector<std::size_t>> MolecularGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(atoms.size());
  for (const Bond& b : bonds) {
    adj[b.begin].push_back(b.end);
    adj[b.end].push_back(b.begin);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

namespace {

/// Bond order in half-units so aromatic (1.5) stays integral.
int half_order(BondOrder b) {
  switch (b) {
    case BondOrder::Single:
      return 2;
    case BondOrder::Double:
      return 4;
    case BondOrder::Triple:
      return 6;
    case BondOrder::Aromatic:
      return 3;
  }
  return 2;
}

/// Floor of the bond-order sum around an atom.
int bond_order_sum(const ParsedMolecule& mol, const std::vector<std::size_t>& incident) {
  int half = 0;
  for (std::size_t b : incident) half += half_order(mol.bonds[b].order);
  return half / 2;
}

/// Which bonds are bridges (Tarjan low-link, iterative).
std::vector<bool> bridge_bonds(std::size_t n, std::span<const Bond> bonds) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (neighbor, bond)
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    adj[bonds[b].begin].push_back({bonds[b].end, b});
    adj[bonds[b].end].push_back({bonds[b].begin, b});
  }
  std::vector<bool> bridge(bonds.size(), false);
  std::vector<std::size_t> disc(n, 0), low(n, 0);
  std::vector<bool> seen(n, false);
  std::size_t timer = 0;
  struct Frame {
    std::size_t atom;
    std::size_t via_bond;
    std::size_t next = 0;
  };
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::vector<Frame> stack{{root, kNone}};
    seen[root] = true;
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.atom].size()) {
        const auto [to, bond] = adj[f.atom][f.next++];
        if (bond == f.via_bond) continue;
        if (seen[to]) {
          low[f.atom] = std::min(low[f.atom], disc[to]);
        } else {
          seen[to] = true;
          disc[to] = low[to] = timer++;
          stack.push_back({to, bond});
        }
        continue;
      }
      const Frame done = f;
      stack.pop_back();
      if (!stack.empty()) {
        const std::size_t parent = stack.back().atom;
        low[parent] = std::min(low[parent], low[done.atom]);
        if (low[done.atom] > disc[parent]) bridge[done.via_bond] = true;
      }
    }
  }
  return bridge;
}

/// Electrons an atom can donate to a pi system; negative when it cannot take part.
int donor_electrons(const ParsedMolecule& mol, const std::vector<std::size_t>& incident, const Perception& p,
                    std::size_t a) {
  const ParsedAtom& atom = mol.atoms[a];
  const int dv = default_valence(atom.atomic_number);
  if (dv <= 1) return -1;
  const int degree = static_cast<int>(incident.size());
  const int total_degree = degree + p.total_hs[a];
  if (total_degree > 3) return -1;
  int lone = outer_electrons(atom.atomic_number) - dv;
  lone = std::max(lone - atom.formal_charge, 0);
  int electrons = (dv - total_degree) + lone - p.radical_electrons[a];
  if (electrons > 1) {
    const int explicit_valence = bond_order_sum(mol, incident) + (atom.bracket ? atom.explicit_hs : 0);
    if (explicit_valence - degree > 1) electrons = 1;
  }
  return electrons;
}

/// Heavier pnictogens and chalcogens join a conjugated system only as a terminal,
/// hydrogen-free chalcogen (thione S=, thiolate S-).
bool conjugation_candidate(const ParsedAtom& atom, int total_degree) {
  const int outer = outer_electrons(atom.atomic_number);
  return atom.atomic_number <= 10 || (outer != 5 && outer != 6) || (outer == 6 && total_degree < 2);
}

std::vector<bool> perceive_conjugation(const ParsedMolecule& mol, const Perception& p,
                                       const std::vector<std::vector<std::size_t>>& incident) {
  std::vector<bool> conjugated(mol.bonds.size(), false);
  for (std::size_t b = 0; b < mol.bonds.size(); ++b) {
    if (mol.bonds[b].order == BondOrder::Aromatic) conjugated[b] = true;
  }
  for (std::size_t a = 0; a < mol.atoms.size(); ++a) {
    const int substituents = static_cast<int>(incident[a].size()) + p.total_hs[a];
    if (!conjugation_candidate(mol.atoms[a], substituents)) continue;
    if (substituents < 2 || substituents > 3) continue;
    for (std::size_t b1 : incident[a]) {
      if (mol.bonds[b1].order == BondOrder::Single) continue;
      for (std::size_t b2 : incident[a]) {
        if (b1 == b2) continue;
        const Bond& bond = mol.bonds[b2];
        const std::size_t other = bond.begin == a ? bond.end : bond.begin;
        const int other_substituents = static_cast<int>(incident[other].size()) + p.total_hs[other];
        if (other_substituents > 3) continue;
        if (conjugation_candidate(mol.atoms[other], other_substituents) &&
            donor_electrons(mol, incident[other], p, other) > 0) {
          conjugated[b1] = true;
          conjugated[b2] = true;
        }
      }
    }
  }
  return conjugated;
}

/// Pentavalent nitrogen with a terminal oxygen (nitro N(=O)=O, N-oxide n=O) becomes the
/// charge-separated [N+][O-] form; the first such oxygen in bond order takes the charge.
void separate_n_oxide_charges(ParsedMolecule& mol) {
  const auto incident = mol.incident_bonds();
  for (std::size_t a = 0; a < mol.atoms.size(); ++a) {
    ParsedAtom& n = mol.atoms[a];
    if (n.atomic_number != 7 || n.formal_charge != 0 || bond_order_sum(mol, incident[a]) != 5) continue;
    for (std::size_t b : incident[a]) {
      Bond& bond = mol.bonds[b];
      const std::size_t o = bond.begin == a ? bond.end : bond.begin;
      ParsedAtom& oxygen = mol.atoms[o];
      if (bond.order != BondOrder::Double || oxygen.atomic_number != 8 || oxygen.formal_charge != 0 ||
          incident[o].size() != 1) {
        continue;
      }
      bond.order = BondOrder::Single;
      n.formal_charge = 1;
      oxygen.formal_charge = -1;
      // Both now carry exactly the hydrogens they had; no implicit ones.
      n.explicit_hs = n.bracket ? n.explicit_hs : 0;
      n.bracket = true;
      oxygen.bracket = true;
      break;
    }
  }
}

}  // namespace

std::vector<bool> perceive_rings(std::size_t atom_count, std::span<const Bond> bonds) {
  const std::vector<bool> bridge = bridge_bonds(atom_count, bonds);
  std::vector<bool> in_ring(atom_count, false);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    if (bridge[b]) continue;
    in_ring[bonds[b].begin] = true;
    in_ring[bonds[b].end] = true;
  }
  return in_ring;
}

int implicit_hydrogens(const ParsedMolecule& mol, std::size_t a) {
  const ParsedAtom& atom = mol.atoms[a];
  if (atom.bracket) return 0;
  std::vector<std::size_t> incident;
  for (std::size_t b = 0; b < mol.bonds.size(); ++b) {
    if (mol.bonds[b].begin == a || mol.bonds[b].end == a) incident.push_back(b);
  }
  const int total = bond_order_sum(mol, incident);
  const auto allowed = organic_valences(atom.atomic_number);
  if (allowed.empty()) return 0;
  if (atom.aromatic) {
    // Aromatic atoms take the first valence only; an aromatic heteroatom already at or
    // above it (pyrrole-type N written without H, furan O, thiophene S) carries none.
    return total <= allowed.front() ? allowed.front() - total : 0;
  }
  for (int v : allowed) {
    if (v >= total) return v - total;
  }
  throw ValenceError(a, "bond-order sum " + std::to_string(total) + " exceeds the largest allowed valence " +
                            std::to_string(allowed.back()) + " of " + std::string(element_symbol(atom.atomic_number)));
}

Perception perceive(const ParsedMolecule& mol) {
  const std::size_t n = mol.atoms.size();
  const auto incident = mol.incident_bonds();
  Perception p;
  p.in_ring = perceive_rings(n, mol.bonds);
  p.total_hs.resize(n);
  p.radical_electrons.assign(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    const ParsedAtom& atom = mol.atoms[a];
    if (!atom.bracket) {
      p.total_hs[a] = implicit_hydrogens(mol, a);
      continue;
    }
    p.total_hs[a] = atom.explicit_hs;
    if (atom.formal_charge != 0) continue;
    const int dv = default_valence(atom.atomic_number);
    if (dv < 0) continue;
    const int remainder = dv - (bond_order_sum(mol, incident[a]) + atom.explicit_hs);
    if (remainder > 0) p.radical_electrons[a] = remainder;
  }
  p.conjugated_bond = perceive_conjugation(mol, p, incident);
  return p;
}

Hybridization hybridization(const ParsedMolecule& mol, const Perception& p, std::size_t a) {
  const ParsedAtom& atom = mol.atoms[a];
  std::vector<std::size_t> incident;
  for (std::size_t b = 0; b < mol.bonds.size(); ++b) {
    if (mol.bonds[b].begin == a || mol.bonds[b].end == a) incident.push_back(b);
  }
  const int degree = static_cast<int>(incident.size());
  const int total_degree = degree + p.total_hs[a];
  int orbitals = total_degree;
  if (atom.atomic_number > 1 && atom.atomic_number < 89) {
    const int outer = outer_electrons(atom.atomic_number);
    const int valence = bond_order_sum(mol, incident) + p.total_hs[a];
    const int free_electrons = outer - (valence + atom.formal_charge);
    if (valence + outer - atom.formal_charge < 8) {
      const int radicals = p.radical_electrons[a];
      orbitals = total_degree + (free_electrons - radicals) / 2 + radicals;
    } else {
      orbitals = total_degree + free_electrons / 2;
    }
  }
  switch (orbitals) {
    case 0:
    case 1:
      return Hybridization::S;
    case 2:
      return Hybridization::SP;
    case 3:
      return Hybridization::SP2;
    case 4: {
      const bool conjugated = std::any_of(incident.begin(), incident.end(),
                                          [&](std::size_t b) { return p.conjugated_bond[b]; });
      return degree <= 3 && conjugated ? Hybridization::SP2 : Hybridization::SP3;
    }
    case 5:
      return Hybridization::SP3D;
    case 6:
      return Hybridization::SP3D2;
    default:
      return Hybridization::Other;
  }
}

MolecularGraph featurize(std::string_view smiles) {
  ParsedMolecule mol = parse_smiles(smiles);
  // An aromatic bond that closes no cycle (biphenyl's inter-ring bond written "cc") is single.
  const std::vector<bool> bridge = bridge_bonds(mol.atoms.size(), mol.bonds);
  for (std::size_t b = 0; b < mol.bonds.size(); ++b) {
    if (bridge[b] && mol.bonds[b].order == BondOrder::Aromatic) mol.bonds[b].order = BondOrder::Single;
  }
  separate_n_oxide_charges(mol);
  const Perception p = perceive(mol);
  const auto incident = mol.incident_bonds();

  MolecularGraph graph;
  graph.source_smiles = std::string(smiles);
  graph.bonds = mol.bonds;
  graph.atoms.reserve(mol.atoms.size());
  for (std::size_t a = 0; a < mol.atoms.size(); ++a) {
    const ParsedAtom& atom = mol.atoms[a];
    AtomFeatures f;
    f.atomic_number = atom.atomic_number;
    f.chirality = atom.chirality;
    f.degree = static_cast<int>(incident[a].size());
    f.formal_charge = atom.formal_charge;
    f.num_hs = p.total_hs[a];
    f.radical_electrons = p.radical_electrons[a];
    f.hybridization = hybridization(mol, p, a);
    f.is_aromatic = atom.aromatic;
    f.in_ring = p.in_ring[a];
    graph.atoms.push_back(f);
  }
  return graph;
}

}  // namespace dmca::chem
