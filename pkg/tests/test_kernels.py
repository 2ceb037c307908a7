"""Parity between the loop kernels (jitted when numba is on) and the
vectorized numpy fallbacks, on randomized and crafted inputs."""
import os
import subprocess
import sys

import numpy as np
import pytest

from aam import _kernels
from aam._kernels import (NUMBA_ENABLED, _cand_area_angle_loop,
                          _cand_area_angle_numpy, _lag_filter_loop,
                          _lag_filter_numpy, _max_lambda_loop,
                          _max_lambda_numpy, _sweep_loop, _sweep_numpy,
                          backend)


def _max_lambda_case(rng, nm=40):
    flow_base = rng.normal(0.0, 1.0, nm)
    flow_dir = rng.normal(0.0, 1.0, nm)
    flow_dir[rng.random(nm) < 0.2] = 0.0          # insensitive branches
    limits = np.abs(rng.normal(1.5, 0.5, nm)) + 0.1
    over = rng.random(nm) < 0.1                    # a few already over limit
    flow_base[over] = limits[over] * 3.0
    flow_dir[over] = 0.0
    scan = rng.random(nm) < 0.8
    return flow_base, flow_dir, limits, scan


def test_max_lambda_loop_vs_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        args = _max_lambda_case(rng)
        l1, b1 = _max_lambda_loop(*args)
        l2, b2 = _max_lambda_numpy(*args)
        assert l1 == pytest.approx(l2, rel=1e-12, abs=1e-12) or (
            np.isinf(l1) and np.isinf(l2))
        if np.isfinite(l1):
            assert b1 == b2


def test_max_lambda_empty_and_all_masked():
    empty = np.empty(0)
    assert _max_lambda_loop(empty, empty, empty, np.empty(0, bool))[0] == np.inf
    assert _max_lambda_numpy(empty, empty, empty, np.empty(0, bool))[0] == np.inf
    fb = np.array([0.5]); fd = np.array([1.0]); lim = np.array([1.0])
    mask = np.array([False])
    assert _max_lambda_loop(fb, fd, lim, mask) == (np.inf, -1)
    assert _max_lambda_numpy(fb, fd, lim, mask) == (np.inf, -1)


def _sweep_case(rng, nb=12, nm=24, nk=6):
    theta_b = rng.normal(0.0, 0.5, nb)
    theta_d = rng.normal(0.0, 0.5, nb)
    s_cols = rng.normal(0.0, 0.3, (nb, nk))
    pairs = rng.integers(0, nb, (nm, 2))
    same = pairs[:, 0] == pairs[:, 1]
    pairs[same, 1] = (pairs[same, 0] + 1) % nb
    br_from, br_to = pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
    br_b = rng.uniform(0.5, 5.0, nm)
    br_limit = np.abs(rng.normal(2.0, 1.0, nm)) + 0.2
    scan = rng.random(nm) < 0.85
    enter_sign = rng.choice([-1.0, 0.0, 1.0], nm)
    cand_pos = rng.choice(nm, nk, replace=False).astype(np.int64)
    cand_from = br_from[cand_pos]
    cand_to = br_to[cand_pos]
    cand_b = br_b[cand_pos]
    return (theta_b, theta_d, s_cols, cand_pos, cand_from, cand_to, cand_b,
            br_from, br_to, br_b, br_limit, scan, enter_sign)


def _assert_sweep_equal(res1, res2):
    lam1, p1, den1, bind1 = res1
    lam2, p2, den2, bind2 = res2
    assert np.allclose(lam1, lam2, rtol=1e-10, atol=1e-12, equal_nan=True)
    assert np.allclose(p1, p2, rtol=1e-10, atol=1e-12, equal_nan=True)
    assert np.allclose(den1, den2, rtol=1e-12, atol=1e-15)
    # binding branch must agree wherever the scan found one
    both = np.isfinite(lam1) & (bind1 >= 0)
    assert np.array_equal(bind1[both], bind2[both])


def test_sweep_loop_vs_numpy():
    rng = np.random.default_rng(1)
    for _ in range(25):
        args = _sweep_case(rng)
        _assert_sweep_equal(_sweep_loop(*args), _sweep_numpy(*args))


def test_sweep_islanding_denominator_path():
    rng = np.random.default_rng(2)
    args = list(_sweep_case(rng, nk=3))
    s_cols, cand_pos, cand_from, cand_to, cand_b = (args[2], args[3], args[4],
                                                    args[5], args[6])
    # force den = 1 - b*(s_f - s_t) to zero for candidate 0
    s_cols[cand_from[0], 0] = s_cols[cand_to[0], 0] + 1.0 / cand_b[0]
    res1 = _sweep_loop(*args)
    res2 = _sweep_numpy(*args)
    assert np.isnan(res1[0][0]) and np.isnan(res2[0][0])
    assert np.isnan(res1[1][0]) and np.isnan(res2[1][0])
    _assert_sweep_equal(res1, res2)


def test_sweep_unbounded_path():
    rng = np.random.default_rng(3)
    args = list(_sweep_case(rng, nk=2))
    args[11] = np.zeros_like(args[11])  # scan nothing: no binding limit
    res1 = _sweep_loop(*args)
    res2 = _sweep_numpy(*args)
    assert np.all(np.isinf(res1[0])) and np.all(np.isinf(res2[0]))
    assert np.all(np.isinf(res1[1])) and np.all(np.isinf(res2[1]))
    assert np.all(res1[3] == -1) and np.all(res2[3] == -1)


def test_candidate_angles_loop_vs_numpy():
    rng = np.random.default_rng(4)
    for _ in range(25):
        (theta_b, _, s_cols, cand_pos, cand_from, cand_to, cand_b,
         *_rest) = _sweep_case(rng)
        nbnd = 4
        bidx = rng.choice(theta_b.shape[0], nbnd, replace=False).astype(np.int64)
        w = rng.normal(0.0, 1.0, nbnd)
        a1 = _cand_area_angle_loop(theta_b, s_cols, cand_from, cand_to, cand_b,
                                   bidx, w)
        a2 = _cand_area_angle_numpy(theta_b, s_cols, cand_from, cand_to, cand_b,
                                    bidx, w)
        assert np.allclose(a1, a2, rtol=1e-11, atol=1e-13, equal_nan=True)


def test_lag_filter_matches_recurrence():
    rng = np.random.default_rng(5)
    x = rng.normal(0.0, 10.0, (200, 3))
    alpha = 0.06
    ref = np.empty_like(x)
    ref[0] = x[0]
    for t in range(1, x.shape[0]):
        ref[t] = ref[t - 1] + alpha * (x[t] - ref[t - 1])
    assert np.allclose(_lag_filter_loop(x, alpha), ref, atol=1e-12)
    assert np.allclose(_lag_filter_numpy(x, alpha), ref, atol=1e-10)
    assert np.allclose(_kernels.lag_filter(x, alpha), ref, atol=1e-10)
    # first row passes through untouched
    assert np.allclose(_lag_filter_numpy(x, alpha)[0], x[0], atol=1e-14)
    empty = np.empty((0, 3))
    assert _lag_filter_numpy(empty, alpha).shape == (0, 3)


@pytest.mark.skipif(not NUMBA_ENABLED, reason="numba path not active")
def test_jitted_dispatch_matches_loops():
    rng = np.random.default_rng(6)
    args = _sweep_case(rng)
    _assert_sweep_equal(_kernels.sweep_max_transfer(*args), _sweep_loop(*args))
    fb, fd, lim, scan = _max_lambda_case(rng)
    assert _kernels.max_lambda(fb, fd, lim, scan) == _max_lambda_loop(fb, fd, lim, scan)
    assert backend() == "numba"


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, AAM_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from aam._kernels import backend; print(backend())"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "numpy"
