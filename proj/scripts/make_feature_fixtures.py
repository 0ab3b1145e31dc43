#!/usr/bin/env python3
"""Builds fixtures/features_50.tsv from the regression benchmark CSVs using RDKit.

Selection is deterministic and uses only RDKit and the SMILES text:
  * the molecule sanitizes in RDKit;
  * RDKit's aromaticity equals the aromaticity as written (lowercase atoms), since the
    featurizer keeps written aromaticity rather than re-perceiving it;
  * no chirality marker sits on a non-carbon atom (RDKit drops those on invertible N).
Molecules exercising chirality, charges, nitro groups, triple bonds, P, S and heavy
halogens are taken first, then the corpus is sampled at even strides up to 50.

Usage: python3 scripts/make_feature_fixtures.py [data_dir] [out_path]
"""
import csv
import json
import sys
from pathlib import Path

from rdkit import Chem, RDLogger

sys.path.insert(0, str(Path(__file__).resolve().parent))
from reference_features import atom_record  # noqa: E402

RDLogger.DisableLog("rdApp.*")

DATASETS = ["esol.csv", "freesolv.csv", "lipophilicity.csv"]
TARGET = 50
CATEGORIES = [
    ("@", 8),
    ("+", 4),
    ("-]", 2),
    ("N(=O)=O", 2),
    ("#", 3),
    ("P", 2),
    ("S", 4),
    ("Br", 2),
    ("I", 1),
    ("=", 4),
]


def eligible(smiles):
    mol = Chem.MolFromSmiles(smiles)
    raw = Chem.MolFromSmiles(smiles, sanitize=False)
    if mol is None or raw is None or mol.GetNumAtoms() != raw.GetNumAtoms():
        return None
    for a, w in zip(mol.GetAtoms(), raw.GetAtoms()):
        if a.GetIsAromatic() != w.GetIsAromatic():
            return None
        if w.GetChiralTag() != Chem.ChiralType.CHI_UNSPECIFIED and w.GetAtomicNum() != 6:
            return None
    return mol


def main():
    data_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    out_path = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("fixtures/features_50.tsv")
    corpus = []
    for name in DATASETS:
        with open(data_dir / name, newline="") as f:
            corpus.extend(row["smiles"].strip() for row in csv.DictReader(f))
    pool = []
    seen = set()
    for s in corpus:
        if s in seen:
            continue
        seen.add(s)
        mol = eligible(s)
        if mol is not None and mol.GetNumAtoms() <= 40:
            pool.append((s, mol))

    chosen = []
    taken = set()
    for needle, count in CATEGORIES:
        for s, mol in pool:
            if count == 0:
                break
            if needle in s and s not in taken:
                chosen.append((s, mol))
                taken.add(s)
                count -= 1
    rest = [(s, m) for s, m in pool if s not in taken]
    stride = len(rest) / (TARGET - len(chosen))
    chosen.extend(rest[int(i * stride)] for i in range(TARGET - len(chosen)))

    with open(out_path, "w") as out:
        out.write("# smiles\tatoms (RDKit " + Chem.rdBase.rdkitVersion + ")\n")
        for s, mol in chosen:
            atoms = [atom_record(a) for a in mol.GetAtoms()]
            out.write(s + "\t" + json.dumps(atoms, separators=(",", ":")) + "\n")
    print(f"wrote {len(chosen)} molecules to {out_path} (pool {len(pool)} of {len(seen)})")


if __name__ == "__main__":
    main()
