"""Command-line interface: ``lcavarsel {fit,select,simulate,associate,replicate}``.

Exit status is 0 on success, 1 on usage or input errors and 2 when a latent
class fit fails numerically. Every command writes ``manifest.json`` into its
output directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__, _backend
from .assoc import association_screen
from .data import CategoricalDataset, DataError, load_csv
from .lca import FitConfig, FitFailure, best_lca_over_g, classify
from .metrics import ari
from .replicate import ReplicationReport, run_replication
from .selector import SelectorConfig, select_variables
from .simgen import ScenarioSpec, generate, replicate_seed


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, seed, inputs, started: float):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "seed": seed,
        "input_digest": {str(p): _digest(Path(p)) for p in inputs},
        "tool_version": __version__,
        "em_backend": _backend.BACKEND,
        "wall_time_s": round(time.time() - started, 3),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _names(arg: str | None) -> list[str]:
    if not arg:
        return []
    return [s.strip() for s in arg.split(",") if s.strip()]


def _ints(arg: str) -> list[int]:
    try:
        return [int(s) for s in _names(arg)]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {arg!r}") from None


def _load(path: str) -> CategoricalDataset:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {p}")
    return load_csv(p)


def _load_labels(path: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {p}")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        obj = json.loads(text)
        labels = obj["true_labels"] if isinstance(obj, dict) else obj
        return [str(v) for v in labels]
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    return lines


def _fit_config(args) -> FitConfig:
    return FitConfig(n_restarts=args.restarts, max_iter=args.max_iter, rel_tol=args.rel_tol, seed=args.seed)


def _selector_config(args, mode: str | None = None) -> SelectorConfig:
    return SelectorConfig(
        g_max=args.g_max,
        mode=mode or getattr(args, "mode", "swap"),
        swap_steps=not getattr(args, "no_swap_steps", False),
        fit_config=_fit_config(args),
    )


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ---------------------------------------------------------------------


def cmd_fit(args) -> int:
    started = time.time()
    data = _load(args.data)
    vars_ = data.indices_of(_names(args.vars)) if args.vars else list(range(data.n_vars))
    if args.g_min < 1 or args.g_max < args.g_min:
        raise UsageError("need 1 <= --g-min <= --g-max")
    config = _fit_config(args)
    model = best_lca_over_g(data, vars_, args.g_max, config, g_min=args.g_min)
    out = _out_dir(args)
    payload = model.to_dict(data.var_names)
    summary = f"g={model.g} bic={model.bic:.6f} loglik={model.loglik:.6f} n_params={model.n_params}"
    if args.labels:
        labels = _load_labels(args.labels)
        if len(labels) != data.n_rows:
            raise UsageError(f"{args.labels}: {len(labels)} labels for {data.n_rows} rows")
        payload["ari"] = ari(classify(model), labels)
        summary += f" ari={payload['ari']:.4f}"
    (out / "model.json").write_text(json.dumps(payload) + "\n", encoding="utf-8")
    print(summary)
    _write_manifest(out, "fit", {"g_min": args.g_min, "g_max": args.g_max, "vars": args.vars,
                                 **vars(config)}, args.seed, [args.data], started)
    return 0


def cmd_select(args) -> int:
    started = time.time()
    data = _load(args.data)
    if data.n_vars < 2:
        raise UsageError("need >= 2 variables")
    config = _selector_config(args)
    trace = select_variables(data, config)
    out = _out_dir(args)
    trace_path = Path(args.trace) if args.trace else out / "trace.jsonl"
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    trace_path.write_text(trace.to_jsonl(data.var_names), encoding="utf-8")
    roles = {
        "clustering": [data.var_names[j] for j in trace.final_roles.clustering],
        "other": [data.var_names[j] for j in trace.final_roles.other],
    }
    (out / "roles.json").write_text(json.dumps(roles) + "\n", encoding="utf-8")
    (out / "model.json").write_text(json.dumps(trace.final_model.to_dict(data.var_names)) + "\n",
                                    encoding="utf-8")
    print(f"selected: {' '.join(roles['clustering'])}")
    print(f"g={trace.final_model.g} bic={trace.final_model.bic:.6f}")
    _write_manifest(out, "select", config.to_dict(), args.seed, [args.data], started)
    return 0


def cmd_simulate(args) -> int:
    started = time.time()
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    out = _out_dir(args)
    written = []
    for rep in range(args.reps):
        seed = replicate_seed(args.seed, rep)
        sim = generate(ScenarioSpec(args.scenario, args.n, seed))
        path = out / f"scenario{args.scenario}_n{args.n}_rep{rep:03d}.csv"
        sim.write(path)
        written.append(path.name)
    print(f"wrote {len(written)} dataset(s) to {out}")
    _write_manifest(out, "simulate", {"scenario": args.scenario, "n": args.n, "reps": args.reps,
                                      "files": written}, args.seed, [], started)
    return 0


def cmd_associate(args) -> int:
    started = time.time()
    data = _load(args.data)
    selected = data.indices_of(_names(args.clustering))
    discarded = data.indices_of(_names(args.discarded))
    if not selected or not discarded:
        raise UsageError("both role sets must be non-empty")
    matrix = association_screen(data, selected=selected, discarded=discarded)
    out = _out_dir(args)
    (out / "association.csv").write_text(matrix.to_csv(data.var_names), encoding="utf-8")
    (out / "association.json").write_text(json.dumps(matrix.to_dict(data.var_names)) + "\n",
                                          encoding="utf-8")
    print(matrix.to_csv(data.var_names), end="")
    _write_manifest(out, "associate", {"clustering": args.clustering, "discarded": args.discarded},
                    None, [args.data], started)
    return 0


def cmd_replicate(args) -> int:
    started = time.time()
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    n_list = _ints(args.n_list)
    if not n_list or min(n_list) < 1:
        raise UsageError("--n-list needs positive sample sizes")
    modes = _names(args.modes)
    for m in modes:
        if m not in ("swap", "independence"):
            raise UsageError(f"unknown mode {m!r}")
    config = _selector_config(args, mode="swap")
    report = run_replication(args.scenario, n_list, args.reps, modes, args.seed, config, jobs=args.jobs)
    out = _out_dir(args)
    tables = {
        "selection_frequencies.csv": report.selection_frequencies(),
        "top_sets.csv": report.top_sets(),
        "ari.csv": report.ari_rows(),
        "ari_summary.csv": report.ari_summary(),
    }
    for name, rows in tables.items():
        (out / name).write_text(ReplicationReport.to_csv(rows), encoding="utf-8")
    print(ReplicationReport.to_csv(report.top_sets()), end="")
    print(ReplicationReport.to_csv(report.ari_summary()), end="")
    _write_manifest(out, "replicate", {"scenario": args.scenario, "n_list": n_list, "reps": args.reps,
                                       "modes": modes, **config.to_dict()}, args.seed, [], started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lcavarsel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fit_flags(p, g_max_default):
        p.add_argument("--g-max", type=int, default=g_max_default)
        p.add_argument("--restarts", type=int, default=10)
        p.add_argument("--max-iter", type=int, default=1000)
        p.add_argument("--rel-tol", type=float, default=1e-8)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default=".")

    p = sub.add_parser("fit", help="fit latent class models over a range of G")
    p.add_argument("data")
    p.add_argument("--g-min", type=int, default=1)
    p.add_argument("--vars", help="comma-separated variable names (default: all)")
    p.add_argument("--labels", help="reference labels: simulate sidecar JSON or one label per line")
    fit_flags(p, 7)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="swap-stepwise variable selection")
    p.add_argument("data")
    p.add_argument("--mode", choices=["swap", "independence"], default="swap")
    p.add_argument("--no-swap-steps", action="store_true")
    p.add_argument("--trace", help="JSON-lines trace path (default: OUT_DIR/trace.jsonl)")
    fit_flags(p, 5)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="write simulated scenario datasets")
    p.add_argument("--scenario", type=int, choices=[1, 2], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("associate", help="association screen between discarded and selected variables")
    p.add_argument("data")
    p.add_argument("--clustering", required=True)
    p.add_argument("--discarded", default="")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_associate)

    p = sub.add_parser("replicate", help="replication study on simulated scenarios")
    p.add_argument("--scenario", type=int, choices=[1, 2], required=True)
    p.add_argument("--n-list", required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--modes", default="swap,independence")
    p.add_argument("--jobs", type=int, default=1)
    fit_flags(p, 5)
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FitFailure as err:
        print(f"lcavarsel: fit failure: {err}", file=sys.stderr)
        return 2
    except (UsageError, DataError, ValueError, OSError) as err:
        print(f"lcavarsel: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
