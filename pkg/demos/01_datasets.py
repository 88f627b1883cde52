"""Loading, encoding, splitting and repairing labeled tabular data.

Run from the repository root:  python demos/01_datasets.py
"""

import tempfile
from pathlib import Path

from leafbridge import (
    SplitSpec,
    inject_missing,
    load_csv,
    one_hot_encode,
    repair_missing,
    split_target,
    write_csv,
)

workdir = Path(tempfile.mkdtemp(prefix="leafbridge_demo_"))

# A small CSV with a numeric column, a categorical column, and a few holes.
# "?" and empty cells are treated as missing.
csv_path = workdir / "toy.csv"
csv_path.write_text(
    "age,group,label\n"
    "23,a,yes\n"
    "31,b,no\n"
    "?,a,yes\n"
    "45,b,no\n"
    "38,,yes\n"
    "29,a,no\n"
    "52,b,yes\n"
    "61,a,no\n",
    encoding="utf-8",
)

ds = load_csv(csv_path, label_column="label")
print("loaded", ds.n, "records with", ds.d, "attributes")
for attr in ds.schema:
    print(f"  {attr.name}: {attr.kind}", attr.categories or "")
print("classes:", ds.class_names)
print("missing cells per column:", ds.missing_mask().sum(axis=0))

# Two repair strategies: deleting incomplete records, or filling cells with
# the column mean (numeric) / mode (categorical).
deleted = repair_missing(ds, "srd")
imputed = repair_missing(ds, "impute")
print("\nsrd keeps", deleted.n, "of", ds.n, "records")
print("impute fills the numeric hole with the column mean:",
      float(imputed.records[2, 0]))

# One-hot encoding turns each categorical column into 0/1 columns, which the
# projection math downstream requires.
encoded = one_hot_encode(imputed)
print("\nencoded schema:", [a.name for a in encoded.schema])
print("first encoded row:", encoded.records[0])

# The evaluation protocol splits a target dataset into a small labeled part
# and a large test part (5%/95% by default; here 25% for visibility).
target, test = split_target(imputed, SplitSpec(target_fraction=0.25, seed=7))
print(f"\nsplit into {target.n} target + {test.n} test records")

# Missing values can also be created on purpose to study robustness: a
# fraction of records gets between 1% and 50% of its cells blanked.
rng_ds = inject_missing(imputed, record_ratio=0.5, seed=0)
print("after injection,", int(rng_ds.missing_mask().any(axis=1).sum()),
      "records contain at least one missing cell")

# Datasets round-trip through CSV exactly.
write_csv(imputed, workdir / "roundtrip.csv")
again = load_csv(workdir / "roundtrip.csv", "label")
print("\nround trip identical:", imputed.equals(again))
