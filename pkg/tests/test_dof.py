import numpy as np
import pytest

from arraycalib import SyncMode, degrees_of_freedom, dof_report, min_sources
from arraycalib.errors import InvalidParameterError

from conftest import random_points


def minimal_pairs(d, mode, max_m=20):
    """Pairs (M, K) that are feasible while (M - 1, K) and (M, K - 1) are not."""
    def ok(m, k):
        return m >= 1 and k >= 1 and m * k >= degrees_of_freedom(m, k, d, mode)

    return {(m, k) for m in range(1, max_m) for k in range(1, 40) if ok(m, k) and not ok(m - 1, k) and not ok(m, k - 1)}


def test_published_minimal_pairs_none():
    pairs = minimal_pairs(3, "none")
    assert {(5, 13), (7, 7), (13, 5)} <= pairs


def test_published_minimal_pairs_one_known():
    pairs = minimal_pairs(3, "one-known")
    assert {(4, 10), (5, 7), (6, 6), (9, 5)} <= pairs


def test_feasibility_examples():
    assert dof_report(5, 13, 3).feasible
    assert dof_report(5, 13, 3).measurements == 65 == dof_report(5, 13, 3).dof
    assert not dof_report(5, 12, 3).feasible
    assert dof_report(4, 10, 3, "one-known").feasible


def test_min_sources():
    assert min_sources(5, 3) == 13
    assert min_sources(6, 3, "one-known") == 6
    assert min_sources(4, 3) is None
    assert min_sources(3, 2) is None


def test_receivers_synced_mirrors_sources_synced():
    for m in range(2, 10):
        for k in range(2, 10):
            assert degrees_of_freedom(m, k, 3, "receivers_synced") == degrees_of_freedom(k, m, 3, "sources_synced")


def jacobian_rank(m, k, d, mode, rng):
    """Rank of the unprojected arrival-time map in positions and unknown timings."""
    x = random_points(rng, m, k, d)
    r, s = x.receivers, x.sources
    cols = []
    diff = r[:, :, None] - s[:, None, :]
    u = diff / np.linalg.norm(diff, axis=0)
    pos = np.zeros((m, k, d, m + k))
    for a in range(m):
        for b in range(k):
            pos[a, b, :, a] = u[:, a, b]
            pos[a, b, :, m + b] = -u[:, a, b]
    cols.append(pos.transpose(0, 1, 3, 2).reshape(m * k, -1))
    if mode in (SyncMode.NONE, SyncMode.SOURCES_SYNCED):
        cols.append(np.kron(np.eye(m), np.ones((k, 1))))
    if mode in (SyncMode.NONE, SyncMode.RECEIVERS_SYNCED):
        cols.append(np.kron(np.ones((m, 1)), np.eye(k)))
    return np.linalg.matrix_rank(np.hstack(cols))


@pytest.mark.parametrize("mode", list(SyncMode))
@pytest.mark.parametrize("d", [2, 3])
def test_dof_matches_jacobian_rank(mode, d):
    # with many measurements the generic Jacobian rank equals the unknown count
    rng = np.random.default_rng(0)
    for m, k in ((9, 10), (12, 8)):
        assert jacobian_rank(m, k, d, mode, rng) == degrees_of_freedom(m, k, d, mode)


def test_report_as_dict_and_describe():
    report = dof_report(4, 100, 3, "none")
    assert report.as_dict()["min_sources"] is None and not report.feasible
    assert "no number of sources" in report.describe()


def test_invalid_arguments():
    with pytest.raises(InvalidParameterError):
        degrees_of_freedom(0, 3)
    with pytest.raises(InvalidParameterError):
        degrees_of_freedom(3, 3, 4)
