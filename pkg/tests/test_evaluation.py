import numpy as np
import pytest

from arraycalib import PointSet, procrustes_align, sweep_statistics
from arraycalib.errors import InvalidInputError
from arraycalib.evaluation import localization_error

from conftest import random_points


def test_identity_alignment():
    rng = np.random.default_rng(0)
    x = random_points(rng, 5, 5)
    res = procrustes_align(x, x)
    np.testing.assert_allclose(res.rotation, np.eye(3), atol=1e-12)
    assert res.e_rs < 1e-12 and res.clipped_rs


def test_reflection_allowed():
    rng = np.random.default_rng(1)
    x = random_points(rng, 5, 5)
    mirrored = PointSet(x.coords * np.array([[-1.0], [1.0], [1.0]]) + 4.0, 5, 5)
    res = procrustes_align(mirrored, x)
    assert res.e_rs < 1e-12
    assert np.linalg.det(res.rotation) == pytest.approx(-1.0)


def grid_oracle(est, truth):
    """Best rigid fit in the plane by a fine angle grid plus reflection, then local polish."""
    best = np.inf
    tc = truth - truth.mean(axis=1, keepdims=True)
    ec = est - est.mean(axis=1, keepdims=True)
    for flip in (1.0, -1.0):
        f = np.diag([1.0, flip])
        angles = np.linspace(0, 2 * np.pi, 20001)
        for _ in range(4):
            costs = []
            for a in angles:
                q = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]) @ f
                costs.append(np.sum((q @ ec - tc) ** 2))
            i = int(np.argmin(costs))
            width = angles[1] - angles[0]
            angles = np.linspace(angles[i] - width, angles[i] + width, 201)
        q = np.array([[np.cos(angles[100]), -np.sin(angles[100])], [np.sin(angles[100]), np.cos(angles[100])]]) @ f
        err = np.linalg.norm(q @ ec - tc, axis=0).mean()
        cost = np.sum((q @ ec - tc) ** 2)
        if cost < best:
            best, best_err = cost, err
    return best_err


def test_matches_grid_search_in_plane():
    rng = np.random.default_rng(2)
    x = random_points(rng, 6, 6, d=2)
    angle = 1.1
    q = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    est = PointSet(q @ x.coords + rng.normal(scale=0.01, size=x.coords.shape) + 2.0, 6, 6)
    res = procrustes_align(est, x)
    assert res.e_rs == pytest.approx(grid_oracle(est.coords, x.coords), abs=1e-6)
    assert 0.005 < res.e_rs < 0.03


def test_receiver_only_alignment():
    rng = np.random.default_rng(3)
    x = random_points(rng, 5, 4)
    coords = x.coords.copy()
    coords[:, 5:] += 1.0
    res = procrustes_align(PointSet(coords, 5, 4), x, on="receivers")
    assert res.e_r < 1e-12 and res.e_rs > 0.1
    with pytest.raises(InvalidInputError):
        procrustes_align(x, x, on="sources")


def test_localization_error_arithmetic():
    rng = np.random.default_rng(4)
    x = random_points(rng, 5, 5)
    assert localization_error(x, x) == (0.0, 0.0)
    coords = x.coords.copy()
    coords[0, 2] += 0.1
    e_rs, e_r = localization_error(PointSet(coords, 5, 5), x)
    assert e_rs == pytest.approx(0.01) and e_r == pytest.approx(0.02)
    noisy = PointSet(x.coords + rng.normal(size=x.coords.shape), 5, 5)
    direct = [np.sqrt(np.sum((noisy.coords[:, i] - x.coords[:, i]) ** 2)) for i in range(10)]
    e_rs, e_r = localization_error(noisy, x)
    assert e_rs == pytest.approx(np.mean(direct)) and e_r == pytest.approx(np.mean(direct[:5]))


def test_statistics_clip():
    s = sweep_statistics([1e-9, 1e-6, 5e-4])
    assert s.median == 1e-3


def test_statistics_hand_computed():
    s = sweep_statistics(np.array([1, 2, 3, 4, 100]) * 1e-2)
    assert s.median == pytest.approx(3e-2)
    assert s.q1 == pytest.approx(2e-2) and s.q3 == pytest.approx(4e-2)
    assert s.outliers == (pytest.approx(1.0),)
    assert s.whisker_high == pytest.approx(4e-2) and s.whisker_low == pytest.approx(1e-2)


def test_statistics_single_trial():
    s = sweep_statistics([0.25])
    assert s.median == 0.25 and s.ci_degenerate


def test_median_ci_brackets_median():
    rng = np.random.default_rng(5)
    values = rng.lognormal(size=40)
    s = sweep_statistics(values, clip_floor=0.0)
    assert s.ci_low <= s.median <= s.ci_high and not s.ci_degenerate
    # order statistics 14 and 27 (1-based) give >= 95 % coverage for n = 40
    ordered = np.sort(values)
    assert s.ci_low == ordered[13] and s.ci_high == ordered[26]


def test_statistics_needs_values():
    with pytest.raises(InvalidInputError):
        sweep_statistics([])
