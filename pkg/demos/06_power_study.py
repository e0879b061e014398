"""A miniature version of the Monte Carlo power study.

Tiny sample sizes and trial counts keep this to about a minute; scale the
numbers (or run `edfcalib simulate` with configs/table1_full.json) for the
full study.
"""

from pathlib import Path

import edfcalib as ec

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

print("== power grid: sub-sampled split vs classical LRT ==")
scenarios = [
    ec.ScenarioConfig(n=n, slope=s) for n in (2000, 5000) for s in (1.0, 0.8, 0.7)
]
tests = [
    ec.TestSpec(name="subsplit_B100", kind="split", b=100),
    ec.TestSpec(name="mean_power_B20", kind="mean_power", b=20),
    ec.TestSpec(name="lrt_boot", kind="lrt", n_boot=200),
]
result = ec.power_study(scenarios, tests, n_trials=120, seed=2024)
header, rows = result.summary_rows("power")
width = max(len(str(h)) for h in header) + 2
print("  ".join(str(h).rjust(width) for h in header))
for row in rows:
    print("  ".join(
        (f"{x:.3f}" if isinstance(x, float) else str(x)).rjust(width) for x in row
    ))
result.to_csv(out / "power_grid.csv")
print(f"wrote {out / 'power_grid.csv'}")

print("\n== how many sub-samples until the threshold crossing? ==")
crossing = ec.crossing_histogram(
    ec.ScenarioConfig(n=5000, slope=0.7),
    ec.TestSpec(name="crossing", kind="split", b=300, stop_at_crossing=True),
    n_trials=120,
    seed=2025,
)
values, counts = crossing.histogram()
print(f"power {crossing.power:.2f}; first crossings "
      f"b<=2: {counts[values <= 2].sum()}, b<=10: {counts[values <= 10].sum()} "
      f"of {counts.sum()} crossing trials")
crossing.to_csv(out / "crossing_histogram.csv")

print("\n== relation between the classical and sub-sampled split LRS ==")
relation = ec.lrs_relation_study(
    ec.ScenarioConfig(n=5000), n_trials=60, seed=2026, b=150
)
print(f"OLS slope on the log scale: {relation.fitted_slope:.3f} "
      f"(Gaussian-theory reference {relation.slope_reference:.2f})")
relation.to_csv(out / "lrs_relation.csv")
print(f"wrote {out / 'crossing_histogram.csv'} and {out / 'lrs_relation.csv'}")
