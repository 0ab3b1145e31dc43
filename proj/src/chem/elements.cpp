#include "dmca/chem/elements.hpp"

#include <algorithm>
#include <array>

namespace dmca::chem {
namespace {

struct ElementRecord {
  std::string_view symbol;
  int outer_electrons;
  int default_valence;  // -1 when no default is defined (metals)
};

// Index = atomic number - 1.
constexpr std::array<ElementRecord, 118> kElements{{
    {"H", 1, 1},
    {"He", 2, 0},
    {"Li", 1, 1},
    {"Be", 2, 2},
    {"B", 3, 3},
    {"C", 4, 4},
    {"N", 5, 3},
    {"O", 6, 2},
    {"F", 7, 1},
    {"Ne", 8, 0},
    {"Na", 1, 1},
    {"Mg", 2, 2},
    {"Al", 3, 3},
    {"Si", 4, 4},
    {"P", 5, 3},
    {"S", 6, 2},
    {"Cl", 7, 1},
    {"Ar", 8, 0},
    {"K", 1, 1},
    {"Ca", 2, 2},
    {"Sc", 3, -1},
    {"Ti", 4, -1},
    {"V", 5, -1},
    {"Cr", 6, -1},
    {"Mn", 7, -1},
    {"Fe", 8, -1},
    {"Co", 9, -1},
    {"Ni", 10, -1},
    {"Cu", 11, -1},
    {"Zn", 2, -1},
    {"Ga", 3, 3},
    {"Ge", 4, 4},
    {"As", 5, 3},
    {"Se", 6, 2},
    {"Br", 7, 1},
    {"Kr", 8, 0},
    {"Rb", 1, 1},
    {"Sr", 2, 2},
    {"Y", 3, -1},
    {"Zr", 4, -1},
    {"Nb", 5, -1},
    {"Mo", 6, -1},
    {"Tc", 7, -1},
    {"Ru", 8, -1},
    {"Rh", 9, -1},
    {"Pd", 10, -1},
    {"Ag", 11, -1},
    {"Cd", 2, -1},
    {"In", 3, 3},
    {"Sn", 4, 2},
    {"Sb", 5, 3},
    {"Te", 6, 2},
    {"I", 7, 1},
    {"Xe", 8, 0},
    {"Cs", 1, 1},
    {"Ba", 2, 2},
    {"La", 3, -1},
    {"Ce", 4, -1},
    {"Pr", 3, -1},
    {"Nd", 4, -1},
    {"Pm", 5, -1},
    {"Sm", 6, -1},
    {"Eu", 7, -1},
    {"Gd", 8, -1},
    {"Tb", 9, -1},
    {"Dy", 10, -1},
    {"Ho", 11, -1},
    {"Er", 12, -1},
    {"Tm", 13, -1},
    {"Yb", 14, -1},
    {"Lu", 15, -1},
    {"Hf", 4, -1},
    {"Ta", 5, -1},
    {"W", 6, -1},
    {"Re", 7, -1},
    {"Os", 8, -1},
    {"Ir", 9, -1},
    {"Pt", 10, -1},
    {"Au", 11, -1},
    {"Hg", 2, -1},
    {"Tl", 3, -1},
    {"Pb", 4, 2},
    {"Bi", 5, 3},
    {"Po", 6, 2},
    {"At", 7, 1},
    {"Rn", 8, 0},
    {"Fr", 1, 1},
    {"Ra", 2, 2},
    {"Ac", 3, -1},
    {"Th", 4, -1},
    {"Pa", 3, -1},
    {"U", 4, -1},
    {"Np", 5, -1},
    {"Pu", 6, -1},
    {"Am", 7, -1},
    {"Cm", 8, -1},
    {"Bk", 9, -1},
    {"Cf", 10, -1},
    {"Es", 11, -1},
    {"Fm", 12, -1},
    {"Md", 13, -1},
    {"No", 14, -1},
    {"Lr", 15, -1},
    {"Rf", 2, -1},
    {"Db", 2, -1},
    {"Sg", 2, -1},
    {"Bh", 2, -1},
    {"Hs", 2, -1},
    {"Mt", 2, -1},
    {"Ds", 2, -1},
    {"Rg", 2, -1},
    {"Cn", 2, -1},
    {"Nh", 2, -1},
    {"Fl", 2, -1},
    {"Mc", 2, -1},
    {"Lv", 2, -1},
    {"Ts", 2, -1},
    {"Og", 2, -1},
}};

}  // namespace

std::optional<int> atomic_number(std::string_view symbol) {
  for (std::size_t i = 0; i < kElements.size(); ++i) {
    if (kElements[i].symbol == symbol) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

std::string_view element_symbol(int z) {
  if (z < 1 || z > static_cast<int>(kElements.size())) return "?";
  return kElements[static_cast<std::size_t>(z - 1)].symbol;
}

int outer_electrons(int z) {
  if (z < 1 || z > static_cast<int>(kElements.size())) return 0;
  return kElements[static_cast<std::size_t>(z - 1)].outer_electrons;
}

int default_valence(int z) {
  if (z < 1 || z > static_cast<int>(kElements.size())) return -1;
  return kElements[static_cast<std::size_t>(z - 1)].default_valence;
}

std::span<const int> organic_valences(int z) {
  static constexpr int kBoron[] = {3};
  static constexpr int kCarbon[] = {4};
  static constexpr int kNitrogen[] = {3, 5};
  static constexpr int kOxygen[] = {2};
  static constexpr int kPhosphorus[] = {3, 5};
  static constexpr int kSulfur[] = {2, 4, 6};
  static constexpr int kHalogen[] = {1};
  switch (z) {
    case 5:
      return kBoron;
    case 6:
      return kCarbon;
    case 7:
      return kNitrogen;
    case 8:
      return kOxygen;
    case 15:
      return kPhosphorus;
    case 16:
      return kSulfur;
    case 9:
    case 17:
    case 35:
    case 53:
      return kHalogen;
    default:
      return {};
  }
}

}  // namespace dmca::chem
