#!/usr/bin/env python3
"""Reference atom features from RDKit, one molecule per line.

Reads SMILES on stdin (one per line) and writes `smiles<TAB>json` where json is a list of
per-atom objects with the nine node-feature fields. Molecules RDKit cannot sanitize are
written with the json value `null`.
"""
import json
import sys

from rdkit import Chem, RDLogger

RDLogger.DisableLog("rdApp.*")

CHIRALITY = {
    Chem.ChiralType.CHI_UNSPECIFIED: "Unspecified",
    Chem.ChiralType.CHI_TETRAHEDRAL_CW: "CW",
    Chem.ChiralType.CHI_TETRAHEDRAL_CCW: "CCW",
}
HYBRIDIZATION = {
    Chem.HybridizationType.S: "S",
    Chem.HybridizationType.SP: "SP",
    Chem.HybridizationType.SP2: "SP2",
    Chem.HybridizationType.SP3: "SP3",
    Chem.HybridizationType.SP3D: "SP3D",
    Chem.HybridizationType.SP3D2: "SP3D2",
}


def atom_record(atom):
    return {
        "atomic_number": atom.GetAtomicNum(),
        "chirality": CHIRALITY.get(atom.GetChiralTag(), "Other"),
        "degree": atom.GetDegree(),
        "formal_charge": atom.GetFormalCharge(),
        "num_hs": atom.GetTotalNumHs(),
        "radical_electrons": atom.GetNumRadicalElectrons(),
        "hybridization": HYBRIDIZATION.get(atom.GetHybridization(), "Other"),
        "is_aromatic": atom.GetIsAromatic(),
        "in_ring": atom.IsInRing(),
    }


def main():
    for line in sys.stdin:
        smiles = line.strip()
        if not smiles:
            continue
        mol = Chem.MolFromSmiles(smiles)
        atoms = None if mol is None else [atom_record(a) for a in mol.GetAtoms()]
        sys.stdout.write(smiles + "\t" + json.dumps(atoms, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
