"""Command-line entry point: ``structpass {ingest,analyze,score,synth}``.

Exit codes: 0 success, 1 runtime failure, 2 invalid input or config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from .clustering import ARCHETYPE_ORDER
from .config import AnalysisConfig
from .ingest import DEFAULT_SMOOTHING_WINDOW, MatchFormatError, MatchResult, SyncError, find_match_dirs, ingest_match
from .pipeline import ModelMismatchError, analyze, score, write_results, write_scored
from .store import read_store, store_hash, write_store
from .synthetic import TEMPLATES, GenerationError, ScenarioSpec, generate
from .types import ConfigError

log = logging.getLogger("structpass")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


def _grid(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like NXxNY, got {text!r}") from None
    return nx, ny


def _ingest_one(args: tuple[str, int, bool]) -> MatchResult | str:
    path, window, goal_kicks = args
    try:
        return ingest_match(path, window, goal_kicks)
    except (MatchFormatError, SyncError, ValueError, OSError) as exc:
        return f"{path}: {exc}"


def cmd_ingest(ns: argparse.Namespace) -> int:
    try:
        dirs = find_match_dirs(ns.input_dir)
    except MatchFormatError as exc:
        raise InputError(str(exc)) from exc
    if not dirs:
        raise InputError(f"{ns.input_dir}: no match directories found")
    work = [(str(d), ns.smoothing, ns.include_goal_kicks) for d in dirs]
    if ns.jobs > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            results = list(pool.map(_ingest_one, work))
    else:
        results = [_ingest_one(w) for w in work]
    errors = [r for r in results if isinstance(r, str)]
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        raise InputError(f"{len(errors)} of {len(dirs)} match directories could not be ingested")
    write_store(ns.output, results)  # type: ignore[arg-type]
    n_passes = sum(len(r.passes) for r in results)  # type: ignore[union-attr]
    print(f"ingested {len(results)} matches, {n_passes} passes -> {ns.output}")
    return EXIT_OK


def _config(ns: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig.load(
        ns.config,
        sigma=ns.sigma,
        window_s=ns.window,
        k=ns.k,
        seed=ns.seed,
        grid=ns.grid,
        restarts=ns.restarts,
    )


def _load_store(path: str):
    try:
        return read_store(path)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    except (ValueError, KeyError) as exc:
        raise InputError(f"{path}: malformed pass store ({exc})") from exc


def cmd_analyze(ns: argparse.Namespace) -> int:
    config = _config(ns)  # validated before touching any data
    store = _load_store(ns.store)
    result = analyze(store, config, jobs=ns.jobs)
    write_results(result, ns.output, inputs={"store": str(ns.store), "sha256": store_hash(ns.store)})
    shares = {a.value: sum(1 for x in result.scored.archetypes if x == a) for a in ARCHETYPE_ORDER}
    print(f"analysed {len(store.passes)} passes -> {ns.output}  {shares}")
    return EXIT_OK


def cmd_score(ns: argparse.Namespace) -> int:
    try:
        bundle = json.loads(Path(ns.model).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"{ns.model}: {exc}") from exc
    store = _load_store(ns.store)
    scored = score(store, bundle, sigma=ns.sigma, jobs=ns.jobs)
    write_scored(
        scored, ns.output, bundle,
        inputs={"store": str(ns.store), "sha256": store_hash(ns.store), "model": str(ns.model)},
    )
    print(f"scored {len(scored.passes)} passes -> {ns.output}")
    return EXIT_OK


def _mix(text: str) -> dict[str, float]:
    if text.lstrip().startswith("{"):
        return json.loads(text)
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise InputError("--mix needs four comma-separated shares (Circ,Dest,LB,SE) or a JSON object")
    return {a.value: v for a, v in zip(ARCHETYPE_ORDER, parts)}


def cmd_synth(ns: argparse.Namespace) -> int:
    spec = ScenarioSpec(
        seed=ns.seed,
        n_matches=ns.matches,
        defense_template=ns.template,
        pass_mix=_mix(ns.mix),
        noise_sd=ns.noise,
        passes_per_match=ns.passes_per_match,
        sigma=ns.sigma,
    )
    dirs = generate(spec, ns.output)
    print(f"wrote {len(dirs)} synthetic matches -> {ns.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="structpass", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", help="extract passes from canonical match directories")
    ing.add_argument("input_dir")
    ing.add_argument("-o", "--output", required=True, help="pass store directory")
    ing.add_argument("--smoothing", type=int, default=DEFAULT_SMOOTHING_WINDOW, help="odd frame window, 1 disables")
    ing.add_argument("--include-goal-kicks", action="store_true")
    ing.add_argument("--jobs", type=int, default=1)
    ing.set_defaults(func=cmd_ingest)

    an = sub.add_parser("analyze", help="fit the archetype model and write every result table")
    an.add_argument("store")
    an.add_argument("-o", "--output", required=True, help="results directory")
    an.add_argument("--config", help="JSON config file; flags override it")
    an.add_argument("--sigma", type=float)
    an.add_argument("--window", type=float, help="post-pass window in seconds")
    an.add_argument("--k", type=int)
    an.add_argument("--seed", type=int)
    an.add_argument("--grid", type=_grid, help="heatmap bins as NXxNY")
    an.add_argument("--restarts", type=int, help="k-means restarts, best inertia kept")
    an.add_argument("--jobs", type=int, default=1)
    an.set_defaults(func=cmd_analyze)

    sc = sub.add_parser("score", help="score passes against a frozen model.json")
    sc.add_argument("store")
    sc.add_argument("--model", required=True)
    sc.add_argument("-o", "--output", required=True)
    sc.add_argument("--sigma", type=float, help="must match the model's sigma")
    sc.add_argument("--jobs", type=int, default=1)
    sc.set_defaults(func=cmd_score)

    sy = sub.add_parser("synth", help="generate synthetic matches with ground truth")
    sy.add_argument("-o", "--output", required=True)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--matches", type=int, default=1)
    sy.add_argument("--template", choices=sorted(TEMPLATES), default="flat_back_four")
    sy.add_argument("--mix", default="0.25,0.25,0.25,0.25", help="Circ,Dest,LB,SE shares or JSON object")
    sy.add_argument("--noise", type=float, default=0.0, help="defender position noise sd in metres")
    sy.add_argument("--passes-per-match", type=int, default=200)
    sy.add_argument("--sigma", type=float, default=10.0)
    sy.set_defaults(func=cmd_synth)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(ns, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return ns.func(ns)
    except (InputError, ConfigError, GenerationError, ModelMismatchError, MatchFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
