"""Seeded replication study over simulated scenarios.

For every replicate the harness simulates a dataset, runs the selection in
each requested mode and scores four latent class fits against the true
labels: all variables (``all``), the true clustering variables (``clus``),
the independence-mode selection (``selInd``) and the swap-mode selection
(``selSwap``).
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .lca import best_lca_over_g, classify
from .metrics import ari
from .selector import SelectorConfig, select_variables
from .simgen import ScenarioSpec, generate, replicate_seed

log = logging.getLogger(__name__)

VARIANT_OF_MODE = {"swap": "selSwap", "independence": "selInd"}
VARIANTS = ("all", "clus", "selInd", "selSwap")


@dataclass(frozen=True)
class ReplicateResult:
    scenario: int
    n: int
    rep: int
    seed: int
    var_names: tuple[str, ...]
    selected: dict  # mode -> tuple of selected variable names
    g_chosen: dict  # variant -> G
    ari: dict  # variant -> ARI


def run_replicate(
    scenario: int, n: int, rep: int, seed: int, modes: Sequence[str], config: SelectorConfig
) -> ReplicateResult:
    data_seed = replicate_seed(seed, rep)
    sim = generate(ScenarioSpec(scenario, n, data_seed))
    data = sim.dataset
    names = data.var_names
    lca_cache: dict = {}
    selected, g_chosen, scores = {}, {}, {}
    for mode in modes:
        trace = select_variables(data, replace(config, mode=mode), lca_cache=lca_cache)
        variant = VARIANT_OF_MODE[trace_mode(mode)]
        selected[trace_mode(mode)] = tuple(names[j] for j in trace.final_roles.clustering)
        g_chosen[variant] = trace.final_model.g
        scores[variant] = ari(classify(trace.final_model), sim.true_labels)
    for variant, vars_ in (("all", range(data.n_vars)), ("clus", sim.true_roles.clustering)):
        model = best_lca_over_g(data, vars_, config.g_max, config.fit_config, cache=lca_cache)
        g_chosen[variant] = model.g
        scores[variant] = ari(classify(model), sim.true_labels)
    log.info("scenario %d n=%d rep %d: %s", scenario, n, rep, selected)
    return ReplicateResult(scenario, n, rep, data_seed, names, selected, g_chosen, scores)


def trace_mode(mode: str) -> str:
    return SelectorConfig(mode=mode).mode


def _run_one(args):
    return run_replicate(*args)


@dataclass(frozen=True)
class ReplicationReport:
    results: tuple[ReplicateResult, ...]

    def _groups(self):
        keys = sorted({(r.n, m) for r in self.results for m in r.selected})
        return keys

    def selection_frequencies(self) -> list[dict]:
        """Share of replicates in which each variable was selected, per (n, mode)."""
        rows = []
        for n, mode in self._groups():
            rs = [r for r in self.results if r.n == n and mode in r.selected]
            names = rs[0].var_names
            counts = Counter(v for r in rs for v in r.selected[mode])
            for v in names:
                rows.append({"n": n, "mode": mode, "variable": v, "frequency": counts[v] / len(rs)})
        return rows

    def frequency(self, n: int, mode: str, variable: str) -> float:
        for row in self.selection_frequencies():
            if row["n"] == n and row["mode"] == mode and row["variable"] == variable:
                return row["frequency"]
        raise KeyError((n, mode, variable))

    def top_sets(self, k: int = 3) -> list[dict]:
        """Most frequently selected variable sets, ties broken by set size then name."""
        rows = []
        for n, mode in self._groups():
            rs = [r for r in self.results if r.n == n and mode in r.selected]
            counts = Counter(r.selected[mode] for r in rs)
            ranked = sorted(counts.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))
            for rank, (s, c) in enumerate(ranked[:k], start=1):
                rows.append({"n": n, "mode": mode, "rank": rank, "set": " ".join(s),
                             "count": c, "proportion": c / len(rs)})
        return rows

    def ari_rows(self) -> list[dict]:
        rows = []
        for r in self.results:
            row = {"n": r.n, "rep": r.rep, "seed": r.seed}
            for v in VARIANTS:
                row[v] = r.ari.get(v, float("nan"))
            rows.append(row)
        return rows

    def ari_summary(self) -> list[dict]:
        rows = []
        for n in sorted({r.n for r in self.results}):
            rs = [r for r in self.results if r.n == n]
            for v in VARIANTS:
                vals = np.array([r.ari[v] for r in rs if v in r.ari])
                if vals.size:
                    rows.append({"n": n, "variant": v, "mean": float(vals.mean()),
                                 "median": float(np.median(vals)), "min": float(vals.min()),
                                 "max": float(vals.max()), "reps": int(vals.size)})
        return rows

    @staticmethod
    def to_csv(rows: Iterable[dict]) -> str:
        rows = list(rows)
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return buf.getvalue()


def run_replication(
    scenario: int,
    n_list: Sequence[int],
    reps: int,
    modes: Sequence[str] = ("swap", "independence"),
    seed: int = 0,
    config: SelectorConfig | None = None,
    jobs: int = 1,
) -> ReplicationReport:
    """Run ``reps`` seeded replicates for every sample size in ``n_list``.

    Replicate ``r`` uses data seed ``replicate_seed(seed, r)`` for every
    sample size, so results do not depend on ``jobs``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    config = config or SelectorConfig()
    tasks = [(scenario, n, rep, seed, tuple(modes), config) for n in n_list for rep in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    return ReplicationReport(tuple(results))
