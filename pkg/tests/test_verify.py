import json

import numpy as np
import pytest

from channel_thermo import verify as V
from channel_thermo.errors import InvalidParams


@pytest.mark.parametrize("suite", ["core", "mixing", "thermo", "capacity"])
def test_suite_passes(suite):
    report = V.verify(suite, seed=0)
    failed = [r for r in report["results"] if not r["passed"]]
    assert not failed, json.dumps(failed, default=str)


def test_report_is_deterministic():
    assert V.verify("thermo", seed=7) == V.verify("thermo", seed=7)


def test_suite_alone_matches_all():
    alone = V.verify("core", seed=1)["results"]
    order = [c.__name__ for s in V.SUITES[:-1] for c in V.SUITE_CHECKS[s]]
    # core comes first, so its streams are the same in both runs
    assert [f"check_{r['check']}" for r in alone] == order[: len(alone)]


def test_unknown_suite():
    with pytest.raises(InvalidParams):
        V.verify("nope")


@pytest.mark.parametrize(
    "check, kwargs",
    [
        (V.check_diagonal_argmin, {"resolution": 21, "workers": 1}),
        (V.check_corners, {"resolution": 31, "workers": 1}),
        (V.check_zero_capacity_line, {}),
        (V.check_determinism, {}),
        (V.check_family_validity, {}),
    ],
)
def test_landscape_checks_small(check, kwargs):
    res = check(np.random.default_rng(0), **kwargs)
    assert res["passed"], res


def test_raising_check_is_reported(monkeypatch):
    from channel_thermo.errors import NoConvergence

    def boom(rng):
        raise NoConvergence("too slow", None)

    monkeypatch.setitem(V.SUITE_CHECKS, "core", [boom])
    report = V.verify("core")
    assert not report["passed"]
    assert report["results"][0]["error"] == "no_convergence"
