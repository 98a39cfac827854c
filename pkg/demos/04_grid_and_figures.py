"""A reduced comparison grid plus figures, end to end.

Runs the two rule-based strategies over the shipped 7-node grid at a demo
episode count, writes the metrics/summary/samples CSVs, audits an archived
evaluation, and (when the plotkit package is installed) renders the three
figure kinds from the CSVs.
"""

import os
from pathlib import Path

from ttlroute.config import load_config
from ttlroute.harness import audit_archive, compare, evaluate

root = Path(__file__).parent.parent
out = Path(os.environ.get("TTLROUTE_OUT_ROOT", root / "runs")) / "demo_grid"
cfg = load_config(root / "configs" / "default7.yaml")

print("comparing mwr_el_lelf and umw_fifo over the full grid (20 episodes/point)...")
compare(cfg, ["mwr_el_lelf", "umw_fifo"], out, episodes=20)
print("summary.csv:")
for line in (out / "summary.csv").read_text().splitlines():
    print(" ", line)

print("\narchiving one evaluation and replaying it through the audit...")
evaluate(cfg, "mwr_el_lelf", seed=1, episodes=5, archive_dir=out / "archive")
report = audit_archive(out / "archive")
print(f"  audited {report['episodes']} episodes, "
      f"{len(report['violations'])} violations, "
      f"metrics recompute bit-exactly: {report['reliability_matches']}")

try:
    from plotkit.render import PlotSpec, render
except ImportError:
    print("\nplotkit not installed; skipping figures (pip install -e plotkit/)")
else:
    render(PlotSpec(kind="reliability_curves", inputs=[out / "metrics.csv"],
                    out=str(out / "reliability.png")))
    render(PlotSpec(kind="throughput_boxplot", inputs=[out / "samples.csv"],
                    lifetime=7, aggregate_rate=18.0,
                    out=str(out / "throughput_box.png")))
    print(f"\nfigures written under {out}")
