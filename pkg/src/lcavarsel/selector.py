"""Swap-stepwise variable selection for latent class analysis.

A proposed variable is compared under two models: M1, where it joins the
latent class model on the current clustering set, and M2, where it is
explained instead by a multinomial regression on a subset of the clustering
variables. ``BIC_diff = BIC(M1) - BIC(M2)``; positive values favour keeping
the variable for clustering. In ``"independence"`` mode the M2 regression is
forced to its intercept-only form, which reproduces the older criterion that
treats the proposed variable as independent of the clustering set.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from .data import CategoricalDataset, VariableRoles
from .lca import FitConfig, FitFailure, LcaModel, best_lca_over_g
from .logreg import LogRegConfig, LogRegModel, fit_multinom, select_predictors

log = logging.getLogger(__name__)

_MODE_ALIASES = {
    "swap": "swap",
    "redundancy-aware": "swap",
    "independence": "independence",
    "independence-baseline": "independence",
}

STEP_KINDS = ("removal", "swap1", "inclusion", "swap2")


@dataclass(frozen=True)
class SelectorConfig:
    g_max: int = 5
    mode: str = "swap"
    swap_steps: bool = True
    fit_config: FitConfig = field(default_factory=FitConfig)
    logreg_config: LogRegConfig = field(default_factory=LogRegConfig)
    cache_fits: bool = True
    max_cycles: int = 50

    def __post_init__(self):
        if self.mode not in _MODE_ALIASES:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "mode", _MODE_ALIASES[self.mode])
        if self.g_max < 2:
            raise ValueError("g_max must be >= 2")

    def to_dict(self) -> dict:
        fc = self.fit_config
        return {
            "g_max": self.g_max,
            "mode": self.mode,
            "swap_steps": self.swap_steps,
            "cache_fits": self.cache_fits,
            "max_cycles": self.max_cycles,
            "fit_config": {
                "n_restarts": fc.n_restarts,
                "max_iter": fc.max_iter,
                "rel_tol": fc.rel_tol,
                "seed": fc.seed,
                "smoothing_eps": fc.smoothing_eps,
            },
            "logreg_config": {
                "max_iter": self.logreg_config.max_iter,
                "grad_tol": self.logreg_config.grad_tol,
            },
        }


@dataclass(frozen=True)
class Evaluation:
    """BIC comparison for one candidate inside a step."""

    candidate: int
    bic_clus: float
    bic_noclus: float
    g_clus: int = 0
    g_noclus: int = 0
    predictors: tuple[int, ...] = ()
    failed: bool = False

    @property
    def bic_diff(self) -> float:
        return self.bic_clus - self.bic_noclus


@dataclass(frozen=True)
class Step:
    kind: str
    candidate: int | None
    x_swap: int | None
    bic_clus: float
    bic_noclus: float
    accepted: bool
    g_chosen: int
    predictors_chosen: tuple[int, ...]
    clustering: tuple[int, ...]
    evaluated: tuple[Evaluation, ...] = ()
    note: str = ""

    @property
    def bic_diff(self) -> float:
        return self.bic_clus - self.bic_noclus

    def to_dict(self, names: Sequence[str]) -> dict:
        nm = lambda j: None if j is None else names[j]  # noqa: E731
        fin = lambda v: v if math.isfinite(v) else None  # noqa: E731
        return {
            "step_kind": self.kind,
            "candidate": nm(self.candidate),
            "x_swap": nm(self.x_swap),
            "bic_clus": fin(self.bic_clus),
            "bic_noclus": fin(self.bic_noclus),
            "bic_diff": fin(self.bic_diff),
            "accepted": self.accepted,
            "g_chosen": self.g_chosen,
            "predictors_chosen": [names[j] for j in self.predictors_chosen],
            "clustering": [names[j] for j in self.clustering],
            "note": self.note,
            "evaluated": [
                {
                    "candidate": names[e.candidate],
                    "bic_clus": fin(e.bic_clus),
                    "bic_noclus": fin(e.bic_noclus),
                    "bic_diff": fin(e.bic_diff),
                    "g_clus": e.g_clus,
                    "g_noclus": e.g_noclus,
                    "predictors": [names[j] for j in e.predictors],
                    "failed": e.failed,
                }
                for e in self.evaluated
            ],
        }


@dataclass(frozen=True, eq=False)
class SelectionTrace:
    steps: tuple[Step, ...]
    final_roles: VariableRoles
    final_model: LcaModel
    n_cycles: int
    cycle_guard_hit: bool = False

    def accepted_steps(self) -> list[Step]:
        return [s for s in self.steps if s.accepted]

    def summary(self, names: Sequence[str]) -> dict:
        return {
            "selected": [names[j] for j in self.final_roles.clustering],
            "discarded": [names[j] for j in self.final_roles.other],
            "g": self.final_model.g,
            "bic": self.final_model.bic,
            "loglik": self.final_model.loglik,
            "n_cycles": self.n_cycles,
            "cycle_guard_hit": self.cycle_guard_hit,
        }

    def to_jsonl(self, names: Sequence[str]) -> str:
        lines = [json.dumps(s.to_dict(names)) for s in self.steps]
        lines.append(json.dumps({"summary": self.summary(names)}))
        return "\n".join(lines) + "\n"


def replay(steps: Sequence[Step], n_vars: int) -> VariableRoles:
    """Apply the accepted moves of a trace to the all-clustering start."""
    roles = VariableRoles.all_clustering(n_vars)
    for s in steps:
        if not s.accepted:
            continue
        if s.kind == "removal":
            roles = roles.remove(s.candidate)
        elif s.kind == "inclusion":
            roles = roles.add(s.candidate)
        elif s.kind == "swap1":
            roles = roles.swap(s.x_swap, s.candidate)
        elif s.kind == "swap2":
            roles = roles.swap(s.candidate, s.x_swap)
    return roles


_FAILED = float("nan")


class _Search:
    """Fit bookkeeping shared by every step of one selection run."""

    def __init__(self, data: CategoricalDataset, config: SelectorConfig, lca_cache: dict | None = None):
        self.data = data
        self.config = config
        if config.cache_fits:
            self.lca_cache = lca_cache if lca_cache is not None else {}
            self.reg_cache: dict | None = {}
            self.sel_cache: dict | None = {}
        else:
            self.lca_cache = self.reg_cache = self.sel_cache = None

    def lca(self, vars: Sequence[int]) -> LcaModel:
        return best_lca_over_g(
            self.data, vars, self.config.g_max, self.config.fit_config, cache=self.lca_cache
        )

    def reg(self, response: int, pool: Sequence[int]) -> LogRegModel:
        """Regression of ``response`` on its selected predictors within ``pool``."""
        pool = tuple(sorted(p for p in pool if p != response))
        if self.config.mode == "independence":
            pool = ()
        key = (response, pool)
        if self.sel_cache is not None and key in self.sel_cache:
            return self.sel_cache[key]
        if not pool:
            model = fit_multinom(self.data, response, (), self.config.logreg_config)
        else:
            model = select_predictors(
                self.data, response, pool, self.config.logreg_config, cache=self.reg_cache
            )
        if self.sel_cache is not None:
            self.sel_cache[key] = model
        return model

    # -- single-candidate comparisons ------------------------------------------

    def eval_remove(self, clustering: Sequence[int], j: int) -> Evaluation:
        rest = [v for v in clustering if v != j]
        try:
            full = self.lca(clustering)
            m2 = self.lca(rest)
        except FitFailure:
            return Evaluation(j, _FAILED, _FAILED, failed=True)
        r = self.reg(j, rest)
        return Evaluation(j, full.bic, m2.bic + r.bic, full.g, m2.g, r.predictors)

    def eval_add(self, clustering: Sequence[int], k: int) -> Evaluation:
        try:
            m1 = self.lca(list(clustering) + [k])
            base = self.lca(clustering)
        except FitFailure:
            return Evaluation(k, _FAILED, _FAILED, failed=True)
        r = self.reg(k, clustering)
        return Evaluation(k, m1.bic, base.bic + r.bic, m1.g, base.g, r.predictors)

    def eval_swap1(self, clustering: Sequence[int], x_swap: int, k: int) -> Evaluation:
        swapped = [v for v in clustering if v != x_swap] + [k]
        try:
            m1 = self.lca(swapped)
            base = self.lca(clustering)
        except FitFailure:
            return Evaluation(k, _FAILED, _FAILED, failed=True)
        r_swap = self.reg(x_swap, swapped)
        r_k = self.reg(k, clustering)
        return Evaluation(k, m1.bic + r_swap.bic, base.bic + r_k.bic, m1.g, base.g, r_k.predictors)

    def eval_swap2(self, clustering: Sequence[int], x_swap: int, j: int) -> Evaluation:
        swapped = [v for v in clustering if v != j] + [x_swap]
        try:
            base = self.lca(clustering)
            m2 = self.lca(swapped)
        except FitFailure:
            return Evaluation(j, _FAILED, _FAILED, failed=True)
        r_swap = self.reg(x_swap, clustering)
        r_j = self.reg(j, swapped)
        return Evaluation(j, base.bic + r_swap.bic, m2.bic + r_j.bic, base.g, m2.g, r_j.predictors)

    # -- steps --------------------------------------------------------------------

    def _g_of(self, clustering) -> int:
        try:
            return self.lca(clustering).g
        except FitFailure:
            return 0

    def _record(self, kind, roles, best, x_swap, accepted, evals, note=""):
        return Step(
            kind=kind,
            candidate=best.candidate,
            x_swap=x_swap,
            bic_clus=best.bic_clus,
            bic_noclus=best.bic_noclus,
            accepted=accepted,
            g_chosen=self._g_of(roles.clustering),
            predictors_chosen=best.predictors,
            clustering=roles.clustering,
            evaluated=tuple(evals),
            note=note,
        )

    def _skipped(self, kind, roles, note) -> Step:
        return Step(kind, None, None, _FAILED, _FAILED, False, self._g_of(roles.clustering), (),
                    roles.clustering, (), note)

    def removal(self, roles: VariableRoles):
        evals = [self.eval_remove(roles.clustering, j) for j in roles.clustering]
        ranked = sorted((e for e in evals if not e.failed), key=lambda e: (e.bic_diff, e.candidate))
        if not ranked:
            return self._skipped("removal", roles, "all candidate fits failed"), roles, []
        best = ranked[0]
        note = ""
        accepted = best.bic_diff < 0
        if accepted and len(roles.clustering) <= 2:
            accepted, note = False, "clustering set cannot shrink below 2 variables"
        if accepted:
            roles = roles.remove(best.candidate)
        order = [e.candidate for e in ranked]
        return self._record("removal", roles, best, None, accepted, evals, note), roles, order

    def swap1(self, roles: VariableRoles, removal_order: list[int], removed: bool):
        if not roles.other:
            return self._skipped("swap1", roles, "no non-clustering variables"), roles
        pos = 1 if removed else 0
        if len(removal_order) <= pos:
            return self._skipped("swap1", roles, "no swap variable available"), roles
        x_swap = removal_order[pos]
        evals = [self.eval_swap1(roles.clustering, x_swap, k) for k in roles.other]
        ranked = sorted((e for e in evals if not e.failed), key=lambda e: (-e.bic_diff, e.candidate))
        if not ranked:
            return self._skipped("swap1", roles, "all candidate fits failed"), roles
        best = ranked[0]
        accepted = best.bic_diff > 0
        if accepted:
            roles = roles.swap(x_swap, best.candidate)
        return self._record("swap1", roles, best, x_swap, accepted, evals), roles

    def inclusion(self, roles: VariableRoles):
        if not roles.other:
            return self._skipped("inclusion", roles, "no non-clustering variables"), roles, []
        evals = [self.eval_add(roles.clustering, k) for k in roles.other]
        ranked = sorted((e for e in evals if not e.failed), key=lambda e: (-e.bic_diff, e.candidate))
        if not ranked:
            return self._skipped("inclusion", roles, "all candidate fits failed"), roles, []
        best = ranked[0]
        accepted = best.bic_diff > 0
        if accepted:
            roles = roles.add(best.candidate)
        order = [e.candidate for e in ranked]
        return self._record("inclusion", roles, best, None, accepted, evals), roles, order

    def swap2(self, roles: VariableRoles, inclusion_order: list[int], included: bool):
        pos = 1 if included else 0
        if not roles.other or len(inclusion_order) <= pos:
            return self._skipped("swap2", roles, "no swap variable available"), roles
        x_swap = inclusion_order[pos]
        evals = [self.eval_swap2(roles.clustering, x_swap, j) for j in roles.clustering]
        ranked = sorted((e for e in evals if not e.failed), key=lambda e: (e.bic_diff, e.candidate))
        if not ranked:
            return self._skipped("swap2", roles, "all candidate fits failed"), roles
        best = ranked[0]
        accepted = best.bic_diff < 0
        if accepted:
            roles = roles.swap(best.candidate, x_swap)
        return self._record("swap2", roles, best, x_swap, accepted, evals), roles

    def run(self) -> SelectionTrace:
        data, config = self.data, self.config
        if data.n_vars < 2:
            raise ValueError("need >= 2 variables")
        roles = VariableRoles.all_clustering(data.n_vars)
        step, roles, _ = self.removal(roles)
        steps = [step]
        cycles = 0
        guard_hit = False
        while True:
            if cycles >= config.max_cycles:
                guard_hit = True
                log.warning("selection stopped by the %d-cycle guard", config.max_cycles)
                break
            cycles += 1
            n_before = len(steps)
            step, roles, order = self.removal(roles)
            steps.append(step)
            if config.swap_steps:
                step, roles = self.swap1(roles, order, steps[-1].accepted)
                steps.append(step)
            step, roles, order = self.inclusion(roles)
            steps.append(step)
            if config.swap_steps:
                step, roles = self.swap2(roles, order, step.accepted)
                steps.append(step)
            if not any(s.accepted for s in steps[n_before:]):
                break
        return SelectionTrace(tuple(steps), roles, self.lca(roles.clustering), cycles, guard_hit)


def select_variables(
    data: CategoricalDataset, config: SelectorConfig | None = None, lca_cache: dict | None = None
) -> SelectionTrace:
    """Run the swap-stepwise search from the all-variables start.

    ``lca_cache`` may be shared between runs on the same data and fit
    configuration (for example the two modes of a comparison study).
    """
    return _Search(data, config or SelectorConfig(), lca_cache).run()


@dataclass(frozen=True)
class BicDiff:
    bic_clus: float
    bic_noclus: float
    g_chosen: int
    predictors: tuple[int, ...]

    @property
    def bic_diff(self) -> float:
        return self.bic_clus - self.bic_noclus


def bic_diff_variable(
    data: CategoricalDataset,
    roles: VariableRoles,
    candidate: int,
    direction: str,
    config: SelectorConfig | None = None,
) -> BicDiff:
    """BIC(M1) - BIC(M2) for removing or adding one variable.

    ``g_chosen`` is the class count of the M1 latent class model.
    """
    search = _Search(data, config or SelectorConfig())
    if direction == "remove":
        if candidate not in roles.clustering or len(roles.clustering) < 2:
            raise ValueError("removal needs a clustering candidate and at least 2 clustering variables")
        ev = search.eval_remove(roles.clustering, candidate)
    elif direction == "add":
        if candidate not in roles.other:
            raise ValueError("inclusion needs a non-clustering candidate")
        ev = search.eval_add(roles.clustering, candidate)
    else:
        raise ValueError(f"direction must be 'remove' or 'add', not {direction!r}")
    if ev.failed:
        raise FitFailure(f"latent class fit failed while evaluating variable {candidate}")
    return BicDiff(ev.bic_clus, ev.bic_noclus, ev.g_clus, ev.predictors)
