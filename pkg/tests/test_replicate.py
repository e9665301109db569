import math

import pytest

from lcavarsel.lca import FitConfig
from lcavarsel.replicate import ReplicationReport, run_replication
from lcavarsel.selector import SelectorConfig

QUICK = SelectorConfig(g_max=2, fit_config=FitConfig(n_restarts=2, max_iter=200, seed=0))


@pytest.fixture(scope="module")
def report():
    return run_replication(2, [120, 160], 2, ("swap", "independence"), seed=9, config=QUICK)


def test_layout(report):
    assert len(report.results) == 4
    r = report.results[0]
    assert set(r.selected) == {"swap", "independence"}
    assert set(r.ari) == {"all", "clus", "selInd", "selSwap"}
    # the same replicate index reuses its data seed at every sample size
    assert [x.seed for x in report.results[:2]] == [x.seed for x in report.results[2:]]


def test_frequencies(report):
    rows = report.selection_frequencies()
    assert len(rows) == 2 * 2 * 10
    for n in (120, 160):
        for mode in ("swap", "independence"):
            sets = [r.selected[mode] for r in report.results if r.n == n]
            expected = sum("X1" in s for s in sets) / len(sets)
            assert report.frequency(n, mode, "X1") == expected
    with pytest.raises(KeyError):
        report.frequency(999, "swap", "X1")


def test_top_sets_and_summary(report):
    top = report.top_sets(k=1)
    assert len(top) == 4 and all(row["rank"] == 1 for row in top)
    summary = report.ari_summary()
    assert {row["variant"] for row in summary} == {"all", "clus", "selInd", "selSwap"}
    assert all(row["min"] <= row["mean"] <= row["max"] for row in summary)
    text = ReplicationReport.to_csv(summary)
    assert text.splitlines()[0] == "n,variant,mean,median,min,max,reps"


def test_parallel_matches_serial(report):
    parallel = run_replication(2, [120, 160], 2, ("swap", "independence"), seed=9, config=QUICK, jobs=2)
    assert parallel.ari_rows() == report.ari_rows()
    assert [r.selected for r in parallel.results] == [r.selected for r in report.results]


def test_single_mode_leaves_other_variant_missing():
    rep = run_replication(2, [120], 1, ("swap",), seed=1, config=QUICK)
    assert math.isnan(rep.ari_rows()[0]["selInd"])


def test_reps_must_be_positive():
    with pytest.raises(ValueError):
        run_replication(1, [100], 0)
