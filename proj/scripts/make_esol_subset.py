"""Writes data/esol_32.csv: every 35th row of data/esol.csv (rows 0, 35, ..., 1085)."""
import csv
import pathlib

root = pathlib.Path(__file__).resolve().parent.parent
with open(root / "data" / "esol.csv", newline="") as f:
    rows = list(csv.reader(f))
header, body = rows[0], rows[1:]
subset = body[::35][:32]
with open(root / "data" / "esol_32.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(header)
    w.writerows(subset)
print(f"wrote {len(subset)} rows")
