"""Command-line surface: run calibration tests, diagrams and studies.

Exit codes: 0 success, 2 rejection when --exit-on-reject is set, 64 on
malformed input or configuration, 65 on domain violations (responses or
means outside the family's support).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import __version__
from ._io import write_csv, write_json
from .classical import lrt_test, reliability_diagram
from .exceptions import (
    CalibrationError,
    ConfigError,
    DomainError,
    NonpositiveWeight,
)
from .families import FAMILY_NAMES, TestSample
from .simulate import (
    ScenarioConfig,
    TestSpec,
    crossing_histogram,
    lrs_relation_study,
    power_study,
)
from .universal import DEFAULT_T_GRID, SplitConfig, subsampled_test

EXIT_OK = 0
EXIT_REJECT = 2
EXIT_USAGE = 64
EXIT_DOMAIN = 65

#: Default seed for `test` and `diagram`, so ad-hoc runs are reproducible.
DEFAULT_SEED = 1729

_TEST_CHOICES = ("lrt", "split", "subsplit", "mean-power", "max-power")


class _UsageError(Exception):
    pass


def _read_sample_csv(path: str, family: str, phi: float) -> TestSample:
    """Parse `y,mu_hat[,weight]` rows; reject non-numeric, NaN and Inf."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise _UsageError(f"cannot open input file: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise _UsageError("input CSV is empty")
        fields = [f.strip() for f in reader.fieldnames]
        for required in ("y", "mu_hat"):
            if required not in fields:
                raise _UsageError(f"input CSV is missing the '{required}' column")
        has_weight = "weight" in fields
        ys, mus, ws = [], [], []
        for line_no, row in enumerate(reader, start=2):
            def parse(col):
                raw = row.get(col)
                if raw is None or raw.strip() == "":
                    raise _UsageError(f"line {line_no}: missing value in column '{col}'")
                try:
                    val = float(raw)
                except ValueError:
                    raise _UsageError(
                        f"line {line_no}: non-numeric value {raw!r} in column '{col}'"
                    ) from None
                if math.isnan(val) or math.isinf(val):
                    raise _UsageError(
                        f"line {line_no}: non-finite value {raw!r} in column '{col}'"
                    )
                return val

            ys.append(parse("y"))
            mus.append(parse("mu_hat"))
            ws.append(parse("weight") if has_weight else 1.0)
    if not ys:
        raise _UsageError("input CSV has no data rows")
    return TestSample(family, phi, ys, mus, ws)


def _finite_or_none(x: float):
    """JSON-safe statistic value: null when the e-value overflows a double."""
    return x if math.isfinite(x) else None


def _write_report(report: dict, output: str | None) -> None:
    text = json.dumps(report, indent=2)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


def _cmd_test(args) -> int:
    if args.test == "lrt":
        for flag, name in (
            (args.b, "--b"),
            (args.split_ratio, "--split-ratio"),
            (args.t_grid, "--t-grid"),
        ):
            if flag is not None:
                raise _UsageError(f"{name} does not apply to --test lrt")
        if args.stop_at_crossing:
            raise _UsageError("--stop-at-crossing does not apply to --test lrt")
    else:
        if args.n_boot is not None:
            raise _UsageError(f"--n-boot does not apply to --test {args.test}")
        if args.test == "split" and args.b is not None:
            raise _UsageError("--b does not apply to --test split (use subsplit)")
        if args.test in ("split", "subsplit") and args.t_grid is not None:
            raise _UsageError(f"--t-grid does not apply to --test {args.test}")

    sample = _read_sample_csv(args.input, args.family, args.phi)
    report = {
        "test": args.test,
        "family": args.family,
        "phi": args.phi,
        "alpha": args.alpha,
        "n": sample.n,
        "seed": args.seed,
        "input": args.input,
    }
    if args.test == "lrt":
        res = lrt_test(sample, args.alpha, args.n_boot or 500, args.seed)
        report.update(
            {
                "log_statistic": res.log_lrs,
                "statistic": _finite_or_none(math.exp(res.log_lrs)
                                             if res.log_lrs < 700 else math.inf),
                "critical_value": res.critical_value,
                "p_value": res.p_value,
                "n_boot": res.n_boot,
                "reject": res.reject,
            }
        )
        reject = res.reject
    else:
        kind = {
            "split": "split",
            "subsplit": "split",
            "mean-power": "mean_power",
            "max-power": "max_power",
        }[args.test]
        b_default = 100 if args.test == "subsplit" else 1
        cfg = SplitConfig(
            s=args.split_ratio if args.split_ratio is not None else 0.5,
            b_max=args.b if args.b is not None else b_default,
            t_grid=tuple(args.t_grid) if args.t_grid is not None else DEFAULT_T_GRID,
            alpha=args.alpha,
            stop_at_crossing=args.stop_at_crossing,
            seed=args.seed,
        )
        rep = subsampled_test(sample, cfg, kind=kind)
        report.update(rep.to_dict(include_trace=True))
        report["statistic"] = _finite_or_none(
            math.exp(rep.log_statistic) if rep.log_statistic < 700 else math.inf
        )
        report["s"] = cfg.s
        reject = rep.reject
    _write_report(report, args.output)
    if reject and args.exit_on_reject:
        return EXIT_REJECT
    return EXIT_OK


def _cmd_diagram(args) -> int:
    sample = _read_sample_csv(args.input, args.family, args.phi)
    diagram = reliability_diagram(sample, args.level, args.n_boot, args.seed)
    if args.output:
        diagram.to_csv(args.output)
    else:
        diagram.to_csv(sys.stdout)
    return EXIT_OK


def _parse_tests(entries, profile_b: int) -> list[TestSpec]:
    specs = []
    for entry in entries:
        if "name" not in entry:
            raise _UsageError("every test entry needs a 'name'")
        kwargs = {
            "name": entry["name"],
            "kind": entry.get("kind", "split"),
            "s": float(entry.get("s", 0.5)),
            "b": int(entry.get("b", profile_b)),
            "alpha": float(entry.get("alpha", 0.05)),
            "stop_at_crossing": bool(entry.get("stop_at_crossing", False)),
            "n_boot": int(entry.get("n_boot", 500)),
            "use_true_means": bool(entry.get("use_true_means", False)),
        }
        if "t" in entry and entry["t"] is not None:
            kwargs["t"] = float(entry["t"])
        if "t_grid" in entry:
            kwargs["t_grid"] = tuple(float(t) for t in entry["t_grid"])
        try:
            specs.append(TestSpec(**kwargs))
        except (ConfigError, TypeError, ValueError) as exc:
            raise _UsageError(f"bad test entry {entry.get('name')!r}: {exc}") from exc
    if not specs:
        raise _UsageError("the 'tests' list must not be empty")
    return specs


def _scenario_kwargs(config: dict) -> dict:
    allowed = (
        "mu_min", "mu_max", "beta_a", "beta_b", "mu_bar", "family", "phi", "v",
    )
    base = config.get("scenario", {})
    unknown = set(base) - set(allowed)
    if unknown:
        raise _UsageError(f"unknown scenario fields: {sorted(unknown)}")
    return dict(base)


def _print_table(header, rows) -> None:
    widths = [
        max(len(str(h)), *(len(_cell(r[i])) for r in rows)) if rows else len(str(h))
        for i, h in enumerate(header)
    ]
    line = "  ".join(str(h).rjust(w) for h, w in zip(header, widths))
    print(line)
    print("-" * len(line))
    for row in rows:
        print("  ".join(_cell(x).rjust(w) for x, w in zip(row, widths)))


def _cell(x) -> str:
    if isinstance(x, float):
        return f"{x:.3f}"
    if x is None:
        return "-"
    return str(x)


def _cmd_simulate(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise _UsageError(f"cannot open config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config is not valid JSON: {exc}") from exc

    seed = args.seed if args.seed is not None else config.get("seed")
    if seed is None:
        raise _UsageError("simulate needs a seed (pass --seed or set 'seed' in the config)")
    profile = config.get("profile", "desk")
    if profile not in ("desk", "full"):
        raise _UsageError("profile must be 'desk' or 'full'")
    default_trials = 500 if profile == "desk" else 1000
    default_b = 200 if profile == "desk" else 1000
    n_trials = int(config.get("n_trials", default_trials))
    scenario_kwargs = _scenario_kwargs(config)

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wrote = []

    if "power" in config:
        section = config["power"]
        try:
            scenarios = [
                ScenarioConfig(n=int(n), slope=float(slope), **scenario_kwargs)
                for n in section["sample_sizes"]
                for slope in section["slopes"]
            ]
        except KeyError as exc:
            raise _UsageError(f"power section is missing {exc}") from exc
        tests = _parse_tests(section.get("tests", []), default_b)
        trials = int(section.get("n_trials", n_trials))
        result = power_study(scenarios, tests, trials, int(seed))
        result.to_csv(out_dir / "power.csv")
        result.to_json(out_dir / "power.json")
        header, rows = result.summary_rows("power")
        write_csv(out_dir / "summary_power.csv", header, rows)
        eheader, erows = result.summary_rows("e_power")
        write_csv(out_dir / "summary_epower.csv", eheader, erows)
        wrote += ["power.csv", "power.json", "summary_power.csv", "summary_epower.csv"]
        print(f"power study: {len(scenarios)} scenarios x {len(tests)} tests, "
              f"{trials} trials, seed {seed}")
        _print_table(header, rows)

    if "crossing" in config:
        section = config["crossing"]
        scenario = ScenarioConfig(
            n=int(section["n"]), slope=float(section.get("slope", 0.8)),
            **scenario_kwargs,
        )
        spec = TestSpec(
            name="crossing",
            kind=section.get("kind", "split"),
            s=float(section.get("s", 0.5)),
            b=int(section.get("b_max", default_b)),
            stop_at_crossing=True,
            alpha=float(section.get("alpha", 0.05)),
        )
        trials = int(section.get("n_trials", n_trials))
        crossing = crossing_histogram(scenario, spec, trials, int(seed))
        crossing.to_csv(out_dir / "crossing.csv")
        write_json(
            out_dir / "crossing.json",
            {
                "power": crossing.power,
                "b_max": crossing.b_max,
                "n_trials": crossing.n_trials,
                "n": scenario.n,
                "slope": scenario.slope,
            },
        )
        wrote += ["crossing.csv", "crossing.json"]
        print(f"crossing study: power {crossing.power:.3f} within b_max={crossing.b_max}")

    if "relation" in config:
        section = config["relation"]
        scenario = ScenarioConfig(n=int(section["n"]), **scenario_kwargs)
        relation = lrs_relation_study(
            scenario,
            int(section.get("n_trials", n_trials)),
            int(seed),
            b=int(section.get("b", default_b)),
            s=float(section.get("s", 0.5)),
            slopes=tuple(section.get("slopes", (1.0, 0.9, 0.8, 0.7))),
        )
        relation.to_csv(out_dir / "relation.csv")
        relation.to_json(out_dir / "relation.json")
        wrote += ["relation.csv", "relation.json"]
        print(f"relation study: fitted slope {relation.fitted_slope:.3f} "
              f"(reference {relation.slope_reference:.2f})")

    if not wrote:
        raise _UsageError("config selects no study (add 'power', 'crossing' or 'relation')")
    print("wrote:", ", ".join(str(out_dir / name) for name in wrote))
    return EXIT_OK


def _t_grid_arg(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad t-grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edfcalib",
        description="Calibration tests for mean estimates within the EDF.",
    )
    parser.add_argument("--version", action="version", version=f"edfcalib {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--family", choices=FAMILY_NAMES, default="poisson")
        p.add_argument("--phi", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--input", required=True, help="CSV with header y,mu_hat[,weight]")
        p.add_argument("--output", default=None)

    p_test = sub.add_parser("test", help="run a calibration test on a CSV sample")
    add_common(p_test)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--test", choices=_TEST_CHOICES, default="subsplit")
    p_test.add_argument("--split-ratio", type=float, default=None)
    p_test.add_argument("--b", type=int, default=None, help="number of sub-samples")
    p_test.add_argument("--t-grid", type=_t_grid_arg, default=None)
    p_test.add_argument("--stop-at-crossing", action="store_true")
    p_test.add_argument("--n-boot", type=int, default=None)
    p_test.add_argument("--exit-on-reject", action="store_true")
    p_test.set_defaults(func=_cmd_test)

    p_diag = sub.add_parser("diagram", help="emit CORP reliability-diagram data")
    add_common(p_diag)
    p_diag.add_argument("--level", type=float, default=0.95)
    p_diag.add_argument("--n-boot", type=int, default=1000)
    p_diag.set_defaults(func=_cmd_diagram)

    p_sim = sub.add_parser("simulate", help="run the simulation studies")
    p_sim.add_argument("--config", required=True, help="JSON study configuration")
    p_sim.add_argument("--output-dir", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_OK
    except _UsageError as exc:
        print(f"edfcalib: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, NonpositiveWeight) as exc:
        print(f"edfcalib: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConfigError as exc:
        print(f"edfcalib: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"edfcalib: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
