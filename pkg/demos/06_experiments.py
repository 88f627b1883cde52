"""The experiment harness: pairs, repeats, reports, significance tests.

Run from the repository root:  python demos/06_experiments.py
"""

import json
import tempfile
from pathlib import Path

from leafbridge import (
    ExperimentSpec,
    PairSpec,
    SplitSpec,
    TransferConfig,
    rotated_pair,
    run_experiment,
    write_csv,
)
from leafbridge.metrics import nemenyi_cd, sign_test

workdir = Path(tempfile.mkdtemp(prefix="leafbridge_demo_"))

# Materialize three source->target pairs as CSV files (any conforming CSV
# pair works; these are synthetic rotated-feature tasks).
pairs = []
for i in range(3):
    src, tgt = rotated_pair(n_source=200, n_target=200, center_spread=2.0,
                            cluster_std=2.0, seed=i)
    s_path, t_path = workdir / f"src{i}.csv", workdir / f"tgt{i}.csv"
    write_csv(src, s_path)
    write_csv(tgt, t_path)
    pairs.append(PairSpec(str(s_path), str(t_path), group="blobs"))

spec = ExperimentSpec(
    pairs=tuple(pairs),
    split=SplitSpec(target_fraction=0.15, seed=0),
    repeats=3,
    methods=("tlf", "source_only", "target_only"),
    output=str(workdir / "report"),
)
cfg = TransferConfig(min_leaf_small=10, seed=0)

report = run_experiment(spec, cfg)
json_path, csv_path = report.write(spec.output)
print("report written to", json_path, "and", csv_path)

print("\nflat accuracy table:")
print(report.to_csv())

print("aggregate accuracies:")
for method, agg in report.aggregates.items():
    if agg["mean_accuracy"] is None:
        # source_only cannot score test records here: the rotated source
        # schema names different features, so its failure is recorded
        # per pair instead of aborting the run
        print(f"  {method}: n/a (failed on every pair)")
    else:
        print(f"  {method}: {agg['mean_accuracy']:.3f} over {agg['pairs']} pairs")

print("\nsignificance (pair level):")
print(json.dumps(report.significance["sign_test"]["pair"], indent=2))

# The same statistics are available standalone for any win/loss record:
print("sign test z for 26 wins / 2 losses:", round(sign_test(26, 2), 3))
print("Nemenyi critical difference for 3 methods over 12 datasets:",
      round(nemenyi_cd(3, 12), 4))

# Everything here is also reachable from the command line:
#   leafbridge run --spec experiment.ini
#   leafbridge transfer --source src.csv --target tgt.csv --output model.json
#   leafbridge inject-missing --input tgt.csv --output tgt_missing.csv --ratio 0.3
#   leafbridge stats --report report.json
