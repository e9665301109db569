"""Generators for the two benchmark simulation scenarios.

Codes are 0-based; the level labels written to CSV are ``"1" .. "C"``.

Scenario 1 (12 variables): X1-X4 follow a 3-class latent class model,
X5-X8 are noisy copies of X1-X4 through fixed transition matrices and
X9-X12 are pure noise.

Scenario 2 (10 binary variables): X1-X5 follow a 2-class model and X6-X10
are threshold functions of noisy copies ``Y_j`` of earlier variables.
Category 2 (code 1) is "occurrence".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import CategoricalDataset, VariableRoles, from_codes

# -- scenario 1 ---------------------------------------------------------------

S1_MIXING = np.array([0.3, 0.5, 0.2])

# rows = classes, columns = categories
S1_CLUSTERING = {
    0: np.array([[0.1, 0.9], [0.3, 0.7], [0.8, 0.2]]),
    1: np.array([[0.1, 0.1, 0.8], [0.2, 0.6, 0.2], [0.8, 0.1, 0.1]]),
    2: np.array([[0.1, 0.7, 0.2], [0.7, 0.1, 0.2], [0.2, 0.2, 0.6]]),
    3: np.array([[0.7, 0.1, 0.1, 0.1], [0.1, 0.1, 0.7, 0.1], [0.2, 0.1, 0.1, 0.6]]),
}

S1_NOISE = {
    8: np.array([0.7, 0.3]),
    9: np.array([0.6, 0.4]),
    10: np.array([0.4, 0.3, 0.3]),
    11: np.array([0.2, 0.3, 0.5]),
}

# redundant column -> (source column, transition matrix with rows = source category)
S1_TRANSITIONS = {
    4: (0, np.array([[0.90, 0.10], [0.20, 0.80]])),
    5: (1, np.array([[0.70, 0.10, 0.20], [0.20, 0.70, 0.10], [0.10, 0.10, 0.80]])),
    6: (2, np.array([[0.80, 0.10, 0.10], [0.05, 0.90, 0.05], [0.20, 0.10, 0.70]])),
    7: (3, np.array([
        [0.70, 0.10, 0.10, 0.10],
        [0.10, 0.80, 0.05, 0.05],
        [0.10, 0.20, 0.60, 0.10],
        [0.05, 0.10, 0.05, 0.80],
    ])),
}

# -- scenario 2 ---------------------------------------------------------------

S2_MIXING = np.array([0.7, 0.3])

# P(occurrence | class) for X1..X5, columns = classes
S2_OCCURRENCE = np.array([
    [0.4, 0.8],
    [0.8, 0.4],
    [0.2, 0.5],
    [0.1, 0.8],
    [0.6, 0.3],
])

S2_TRANSITION = np.array([[0.80, 0.20], [0.20, 0.80]])


def _rule_ge(threshold):
    return lambda total: total >= threshold


# redundant column -> (Y sources as 1-based variable numbers, rule on the sum of Y values in {1, 2})
S2_RULES = {
    5: ((1, 2), _rule_ge(3)),
    6: ((3, 6), _rule_ge(4)),
    7: ((4, 5, 7), _rule_ge(5)),
    8: ((2, 6, 8), _rule_ge(5)),
    9: ((3, 5, 8, 9), lambda total: total <= 5),
}


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: int
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.scenario_id not in (1, 2):
            raise ValueError(f"unknown scenario {self.scenario_id}; expected 1 or 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True, eq=False)
class SimulatedData:
    dataset: CategoricalDataset
    true_labels: np.ndarray
    true_roles: VariableRoles
    redundant: tuple[int, ...]
    intermediates: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        names = self.dataset.var_names
        return {
            "true_labels": self.true_labels.tolist(),
            "clustering": [names[j] for j in self.true_roles.clustering],
            "redundant": [names[j] for j in self.redundant],
            "noise": [names[j] for j in self.true_roles.other if j not in self.redundant],
        }

    def write(self, csv_path: str | Path) -> Path:
        """Write the dataset CSV and a ``.json`` sidecar next to it."""
        csv_path = Path(csv_path)
        self.dataset.to_csv(csv_path)
        side = csv_path.with_suffix(".json")
        side.write_text(json.dumps(self.sidecar()) + "\n", encoding="utf-8")
        return side


def _draw(rng, probs_per_row: np.ndarray) -> np.ndarray:
    """One categorical draw per row by inverting the row-wise CDF."""
    cdf = np.cumsum(probs_per_row, axis=1)
    u = rng.random(probs_per_row.shape[0])
    out = (u[:, None] >= cdf).sum(axis=1)
    return np.minimum(out, probs_per_row.shape[1] - 1)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generate_scenario1(spec: ScenarioSpec) -> SimulatedData:
    if spec.scenario_id != 1:
        raise ValueError("spec is not for scenario 1")
    rng = _rng(spec.seed)
    n = spec.n
    z = _draw(rng, np.broadcast_to(S1_MIXING, (n, 3)))
    codes = np.zeros((n, 12), dtype=np.int64)
    for j in range(12):
        if j in S1_CLUSTERING:
            codes[:, j] = _draw(rng, S1_CLUSTERING[j][z])
        elif j in S1_TRANSITIONS:
            src, trans = S1_TRANSITIONS[j]
            codes[:, j] = _draw(rng, trans[codes[:, src]])
        else:
            p = S1_NOISE[j]
            codes[:, j] = _draw(rng, np.broadcast_to(p, (n, p.size)))
    ncat = [2, 3, 3, 4, 2, 3, 3, 4, 2, 2, 3, 3]
    return SimulatedData(
        dataset=from_codes(codes, ncat),
        true_labels=z,
        true_roles=VariableRoles(tuple(range(4)), tuple(range(4, 12))),
        redundant=tuple(range(4, 8)),
    )


def generate_scenario2(spec: ScenarioSpec) -> SimulatedData:
    if spec.scenario_id != 2:
        raise ValueError("spec is not for scenario 2")
    rng = _rng(spec.seed)
    n = spec.n
    z = _draw(rng, np.broadcast_to(S2_MIXING, (n, 2)))
    codes = np.zeros((n, 10), dtype=np.int64)
    ys: dict[int, np.ndarray] = {}

    def y_of(var: int) -> np.ndarray:
        # Y_j as a value in {1, 2}, drawn once from X_j through the transition matrix
        if var not in ys:
            ys[var] = _draw(rng, S2_TRANSITION[codes[:, var - 1]]) + 1
        return ys[var]

    for j in range(5):
        p = S2_OCCURRENCE[j][z]
        codes[:, j] = _draw(rng, np.column_stack([1.0 - p, p]))
    for j in range(5, 10):
        sources, rule = S2_RULES[j]
        total = sum(y_of(s) for s in sources)
        codes[:, j] = np.where(rule(total), 1, 0)
    return SimulatedData(
        dataset=from_codes(codes, [2] * 10),
        true_labels=z,
        true_roles=VariableRoles(tuple(range(5)), tuple(range(5, 10))),
        redundant=tuple(range(5, 10)),
        intermediates={f"Y{k}": v for k, v in sorted(ys.items())},
    )


def generate(spec: ScenarioSpec) -> SimulatedData:
    if spec.scenario_id == 1:
        return generate_scenario1(spec)
    return generate_scenario2(spec)


def replicate_seed(seed: int, rep: int) -> int:
    """Seed for replicate ``rep`` of a study started from ``seed``."""
    return int(np.random.SeedSequence(seed, spawn_key=(rep,)).generate_state(1, np.uint64)[0])
