"""Pairwise association screen between discarded and selected variables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import CategoricalDataset, VariableRoles
from .logreg import LogRegConfig, fit_multinom


@dataclass(frozen=True, eq=False)
class AssociationMatrix:
    """``bic_diff_as[i, j]`` compares ``discarded[i]`` regressed on ``selected[j]``
    against its intercept-only model; positive values indicate association."""

    selected: tuple[int, ...]
    discarded: tuple[int, ...]
    bic_diff_as: np.ndarray

    def to_csv(self, var_names: Sequence[str]) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["discarded"] + [var_names[j] for j in self.selected])
        for i, o in enumerate(self.discarded):
            w.writerow([var_names[o]] + [repr(float(v)) for v in self.bic_diff_as[i]])
        return buf.getvalue()

    def to_dict(self, var_names: Sequence[str]) -> dict:
        return {
            "selected": [var_names[j] for j in self.selected],
            "discarded": [var_names[j] for j in self.discarded],
            "bic_diff_as": self.bic_diff_as.tolist(),
        }


def bic_diff_as(
    data: CategoricalDataset, discarded: int, selected: int, config: LogRegConfig | None = None
) -> float:
    """BIC(X_o | X_c) - BIC(X_o) from two multinomial regressions."""
    with_pred = fit_multinom(data, discarded, [selected], config)
    null = fit_multinom(data, discarded, [], config)
    return with_pred.bic - null.bic


def association_screen(
    data: CategoricalDataset,
    roles: VariableRoles | None = None,
    *,
    selected: Sequence[int] | None = None,
    discarded: Sequence[int] | None = None,
    config: LogRegConfig | None = None,
) -> AssociationMatrix:
    """Screen every (discarded, selected) pair.

    Pass either ``roles`` or explicit ``selected`` / ``discarded`` index lists.
    """
    if roles is not None:
        selected, discarded = roles.clustering, roles.other
    selected = tuple(selected or ())
    discarded = tuple(discarded or ())
    if not selected or not discarded:
        raise ValueError("both role sets must be non-empty")
    if set(selected) & set(discarded):
        raise ValueError("a variable cannot be both selected and discarded")
    nulls = {o: fit_multinom(data, o, [], config).bic for o in discarded}
    out = np.empty((len(discarded), len(selected)))
    for i, o in enumerate(discarded):
        for j, c in enumerate(selected):
            out[i, j] = fit_multinom(data, o, [c], config).bic - nulls[o]
    return AssociationMatrix(selected, discarded, out)
