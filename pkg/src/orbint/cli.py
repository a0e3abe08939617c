"""Command line entry point: ``orbint run`` and ``orbint list``."""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import scenarios as S
from .config import ScenarioConfig, parse_config, parse_schedule
from .errors import ConfigError, OrbintError, QuadratureFailure, SingularHit
from .parallel import worker_count

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
CSV_HEADER = "scenario,point_index,level,value_re,value_im,reference_re,reference_im,abs_error"


class NumericalFailure(OrbintError, ArithmeticError):
    pass


def load_config(text: str, seed: int = None) -> ScenarioConfig:
    """Parse, validate against the named scenario and fill in its defaults."""
    bare = parse_config(text)
    sc = S.get(bare.name)
    cfg = parse_config(text, sc.params)
    for key in ("instance",):
        given = cfg.get("scenario", key)
        if given is not None and given != sc.defaults["scenario"][key]:
            raise ConfigError(f"{sc.name} runs on {sc.defaults['scenario'][key]!r}, not {given!r}")
    levels = cfg.get("scenario", "levels")
    if levels is not None:
        kind, _, _ = parse_schedule(levels)
        want, _, _ = parse_schedule(sc.defaults["scenario"]["levels"])
        if kind != want:
            raise ConfigError(f"{sc.name} needs a {want!r} level schedule")
    size = cfg.get("scenario", "sample_size")
    if size is not None and size < 1:
        raise ConfigError("sample_size must be positive")
    if seed is not None:
        cfg.set("scenario", "seed", seed)
    full = S.resolved(cfg)
    if full.get("scenario", "seed") is None:
        full.set("scenario", "seed", 0)
    return full


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_text(name: str, rows) -> str:
    lines = [CSV_HEADER]
    for point, level, value, ref in rows:
        err = abs(value - ref)
        lines.append(",".join([name, str(point), _fmt(level) if isinstance(level, float) else str(level),
                               _fmt(value.real), _fmt(value.imag), _fmt(ref.real), _fmt(ref.imag), _fmt(err)]))
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, complex):
        return {"re": _jsonable(v.real), "im": _jsonable(v.imag)}
    return v


def plot_script(csv_name: str) -> str:
    return f'''"""Plot |value - reference| per level for every point in {csv_name}."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open({csv_name!r}, newline="") as fh:
    for row in csv.DictReader(fh):
        series[int(row["point_index"])].append((float(row["level"]), float(row["abs_error"])))

fig, ax = plt.subplots()
for pts in list(series.values())[:50]:
    pts.sort()
    ax.plot([p[0] for p in pts], [max(p[1], 1e-17) for p in pts], lw=0.5, alpha=0.6)
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("level")
ax.set_ylabel("abs_error")
fig.savefig({csv_name.rsplit(".", 1)[0] + ".png"!r}, dpi=150)
'''


def run_scenario(cfg: ScenarioConfig):
    """Run the configured scenario; returns ``(outcome, report_dict)``."""
    sc = S.get(cfg.name)
    start = time.perf_counter()
    with np.errstate(over="raise", invalid="raise"):
        try:
            outcome = sc.run(cfg)
        except (FloatingPointError, OverflowError, QuadratureFailure, SingularHit) as exc:
            raise NumericalFailure(str(exc)) from exc
    wall = time.perf_counter() - start
    for _, _, value, ref in outcome.rows:
        if not (np.isfinite(value) and np.isfinite(ref)):
            raise NumericalFailure(f"non-finite value in {sc.name} output")
    passed = all(v["passed"] for v in outcome.verdicts.values())
    report = {
        "scenario": sc.name,
        "description": sc.description,
        "config": cfg.to_json(),
        "config_text": cfg.to_text(),
        "verdicts": _jsonable(outcome.verdicts),
        "notes": outcome.notes,
        "rows": len(outcome.rows),
        "wall_time_s": wall,
        "threads": worker_count(),
        "passed": passed,
    }
    return outcome, report


def cmd_run(args) -> int:
    try:
        worker_count()
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = load_config(text, args.seed)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    csv_path = out_dir / cfg.get("output", "csv", f"{cfg.name}.csv")
    json_path = out_dir / cfg.get("output", "json", f"{cfg.name}.json")
    try:
        outcome, report = run_scenario(cfg)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    report["csv"] = str(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(cfg.name, outcome.rows))
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, allow_nan=False)
        fh.write("\n")
    if args.emit_plot_script:
        script = csv_path.with_name(csv_path.stem + "_plot.py")
        with open(script, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(plot_script(csv_path.name))
    for name, v in outcome.verdicts.items():
        print(f"{'PASS' if v['passed'] else 'FAIL'}  {name}")
    print(f"{cfg.name}: {'passed' if report['passed'] else 'failed'} in {report['wall_time_s']:.2f}s")
    return EXIT_OK if report["passed"] else EXIT_VERDICT


def listing(filter_text: str = None) -> list:
    out = []
    for name in sorted(S.REGISTRY):
        if filter_text and filter_text not in name:
            continue
        sc = S.REGISTRY[name]
        cfg = sc.default_config()
        out.append({"name": name, "description": sc.description,
                    "defaults": cfg.to_json(), "config_text": cfg.to_text()})
    return out


def cmd_list(args) -> int:
    rows = listing(args.filter)
    if args.json:
        print(json.dumps(rows, indent=2))
        return EXIT_OK
    width = max((len(r["name"]) for r in rows), default=4)
    for r in rows:
        sc = r["defaults"]["scenario"]
        print(f"{r['name']:<{width}}  {sc.get('levels', ''):<16}  {r['description']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbint", description="Orbital integral experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a config file")
    r.add_argument("config")
    r.add_argument("--out", default=".", help="output directory (default: current directory)")
    r.add_argument("--seed", type=int, default=None, help="override scenario.seed")
    r.add_argument("--emit-plot-script", action="store_true", help="write a matplotlib script next to the CSV")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list registered scenarios")
    ls.add_argument("--json", action="store_true")
    ls.add_argument("--filter", default=None, help="substring of the scenario name")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
