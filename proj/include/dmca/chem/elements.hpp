#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace dmca::chem {

/// Atomic number for a capitalized element symbol ("C", "Cl", "Se"), if known.
std::optional<int> atomic_number(std::string_view symbol);
std::string_view element_symbol(int atomic_number);

/// Valence-shell electron count.
int outer_electrons(int atomic_number);
/// First (lowest) conventional valence, or -1 for elements without one.
int default_valence(int atomic_number);
/// Allowed valences of the SMILES organic subset (B C N O P S F Cl Br I), ascending; empty otherwise.
std::span<const int> organic_valences(int atomic_number);

}  // namespace dmca::chem
