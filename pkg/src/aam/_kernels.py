"""Hot numeric kernels, jitted when numba is available.

The contingency sweep dominates study runtime: for every outage candidate we
need a rank-1 update of the DC solution, a feasibility scan over every limited
branch, and the entering-power evaluation.  Those loops live here in a form
numba can compile.  Setting AAM_DISABLE_NUMBA=1 (or running without numba
installed) selects vectorized numpy implementations with identical semantics;
benchmarks/bench_kernels.py compares the two paths.
"""
from __future__ import annotations

import os

import numpy as np

_FLOW_EPS = 1e-12  # below this a branch flow does not respond to the transfer
_DENOM_EPS = 1e-9  # rank-1 update denominator ~0 means the outage islands

_env = os.environ.get("AAM_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _env in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by AAM_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# loop-form implementations (jitted when numba is on)


def _max_lambda_loop(flow_base, flow_dir, limits, scan):
    best = np.inf
    bidx = -1
    for j in range(flow_base.shape[0]):
        if not scan[j]:
            continue
        f0 = flow_base[j]
        fd = flow_dir[j]
        lim = limits[j]
        if fd > _FLOW_EPS:
            lj = (lim - f0) / fd
        elif fd < -_FLOW_EPS:
            lj = (-lim - f0) / fd
        elif abs(f0) <= lim:
            continue
        else:
            lj = 0.0
        if lj < best:
            best = lj
            bidx = j
    return best, bidx


def _sweep_loop(theta_b, theta_d, s_cols, cand_pos, cand_from, cand_to, cand_b,
                br_from, br_to, br_b, br_limit, scan, enter_sign):
    nk = cand_pos.shape[0]
    nm = br_from.shape[0]
    lam = np.empty(nk)
    p_enter = np.empty(nk)
    denom = np.empty(nk)
    binding = np.full(nk, -1, np.int64)
    for k in range(nk):
        f = cand_from[k]
        t = cand_to[k]
        den = 1.0 - cand_b[k] * (s_cols[f, k] - s_cols[t, k])
        denom[k] = den
        if abs(den) < _DENOM_EPS:
            lam[k] = np.nan
            p_enter[k] = np.nan
            continue
        cb = cand_b[k] * (theta_b[f] - theta_b[t]) / den
        cd = cand_b[k] * (theta_d[f] - theta_d[t]) / den
        best = np.inf
        bidx = -1
        for j in range(nm):
            if j == cand_pos[k] or not scan[j]:
                continue
            fj = br_from[j]
            tj = br_to[j]
            ds = s_cols[fj, k] - s_cols[tj, k]
            f0 = br_b[j] * ((theta_b[fj] - theta_b[tj]) + cb * ds)
            fd = br_b[j] * ((theta_d[fj] - theta_d[tj]) + cd * ds)
            lim = br_limit[j]
            if fd > _FLOW_EPS:
                lj = (lim - f0) / fd
            elif fd < -_FLOW_EPS:
                lj = (-lim - f0) / fd
            elif abs(f0) <= lim:
                continue
            else:
                lj = 0.0
            if lj < best:
                best = lj
                bidx = j
        if best == np.inf:
            lam[k] = np.inf
            p_enter[k] = np.inf
            continue
        lk = best if best > 0.0 else 0.0
        lam[k] = lk
        binding[k] = bidx
        p = 0.0
        for j in range(nm):
            if j == cand_pos[k] or enter_sign[j] == 0.0:
                continue
            fj = br_from[j]
            tj = br_to[j]
            ds = s_cols[fj, k] - s_cols[tj, k]
            dth = (theta_b[fj] - theta_b[tj]) + cb * ds \
                + lk * ((theta_d[fj] - theta_d[tj]) + cd * ds)
            p += enter_sign[j] * br_b[j] * dth
        p_enter[k] = p
    return lam, p_enter, denom, binding


def _cand_area_angle_loop(theta, s_cols, cand_from, cand_to, cand_b, bidx, w):
    nk = cand_from.shape[0]
    out = np.empty(nk)
    base = 0.0
    for i in range(bidx.shape[0]):
        base += w[i] * theta[bidx[i]]
    for k in range(nk):
        f = cand_from[k]
        t = cand_to[k]
        den = 1.0 - cand_b[k] * (s_cols[f, k] - s_cols[t, k])
        if abs(den) < _DENOM_EPS:
            out[k] = np.nan
            continue
        c = cand_b[k] * (theta[f] - theta[t]) / den
        acc = base
        for i in range(bidx.shape[0]):
            acc += c * w[i] * s_cols[bidx[i], k]
        out[k] = acc
    return out


def _lag_filter_loop(targets, alpha):
    out = np.empty_like(targets)
    nt = targets.shape[0]
    nc = targets.shape[1]
    for c in range(nc):
        out[0, c] = targets[0, c]
    for t in range(1, nt):
        for c in range(nc):
            out[t, c] = out[t - 1, c] + alpha * (targets[t, c] - out[t - 1, c])
    return out


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks


def _max_lambda_numpy(flow_base, flow_dir, limits, scan):
    with np.errstate(divide="ignore", invalid="ignore"):
        lj = np.where(
            flow_dir > _FLOW_EPS,
            (limits - flow_base) / flow_dir,
            np.where(
                flow_dir < -_FLOW_EPS,
                (-limits - flow_base) / flow_dir,
                np.where(np.abs(flow_base) <= limits, np.inf, 0.0),
            ),
        )
    lj = np.where(scan, lj, np.inf)
    if lj.size == 0 or not np.isfinite(lj).any():
        return np.inf, -1
    bidx = int(np.argmin(lj))
    return float(lj[bidx]), bidx


def _sweep_numpy(theta_b, theta_d, s_cols, cand_pos, cand_from, cand_to, cand_b,
                 br_from, br_to, br_b, br_limit, scan, enter_sign):
    nk = cand_pos.shape[0]
    nm = br_from.shape[0]
    cols = np.arange(nk)
    ds_all = s_cols[br_from, :] - s_cols[br_to, :]          # (nm, nk)
    den = 1.0 - cand_b * ds_all[cand_pos, cols]
    ok = np.abs(den) >= _DENOM_EPS
    safe = np.where(ok, den, 1.0)
    cb = np.where(ok, cand_b * (theta_b[cand_from] - theta_b[cand_to]) / safe, np.nan)
    cd = np.where(ok, cand_b * (theta_d[cand_from] - theta_d[cand_to]) / safe, np.nan)

    dtb = (theta_b[br_from] - theta_b[br_to])[:, None] + ds_all * cb[None, :]
    dtd = (theta_d[br_from] - theta_d[br_to])[:, None] + ds_all * cd[None, :]
    f0 = br_b[:, None] * dtb
    fd = br_b[:, None] * dtd
    lim = br_limit[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        lj = np.where(
            fd > _FLOW_EPS,
            (lim - f0) / fd,
            np.where(fd < -_FLOW_EPS, (-lim - f0) / fd,
                     np.where(np.abs(f0) <= lim, np.inf, 0.0)),
        )
    allowed = scan[:, None] & (np.arange(nm)[:, None] != cand_pos[None, :])
    lj = np.where(allowed, lj, np.inf)
    if nm:
        best = lj.min(axis=0)
        binding = lj.argmin(axis=0).astype(np.int64)
    else:
        best = np.full(nk, np.inf)
        binding = np.full(nk, -1, np.int64)
    unbounded = ~np.isfinite(best)
    binding[unbounded] = -1
    lam = np.clip(best, 0.0, None)

    with np.errstate(invalid="ignore"):  # inf*0 rows are masked right below
        contrib = (enter_sign * br_b)[:, None] * (dtb + lam[None, :] * dtd)
    contrib[np.arange(nm)[:, None] == cand_pos[None, :]] = 0.0
    contrib[:, unbounded] = 0.0
    p = contrib.sum(axis=0) if nm else np.zeros(nk)
    p = np.where(unbounded, np.inf, p)
    p = np.where(ok, p, np.nan)
    lam = np.where(ok, lam, np.nan)
    binding[~ok] = -1
    return lam, p, den, binding


def _cand_area_angle_numpy(theta, s_cols, cand_from, cand_to, cand_b, bidx, w):
    nk = cand_from.shape[0]
    den = 1.0 - cand_b * (s_cols[cand_from, np.arange(nk)] - s_cols[cand_to, np.arange(nk)])
    ok = np.abs(den) >= _DENOM_EPS
    safe = np.where(ok, den, 1.0)
    c = cand_b * (theta[cand_from] - theta[cand_to]) / safe
    base = float(w @ theta[bidx])
    out = base + c * (w @ s_cols[bidx, :])
    return np.where(ok, out, np.nan)


def _lag_filter_numpy(targets, alpha):
    from scipy.signal import lfilter

    if targets.shape[0] == 0:
        return targets.copy()
    zi = (1.0 - alpha) * targets[0:1, :]
    out, _ = lfilter([alpha], [1.0, -(1.0 - alpha)], targets, axis=0, zi=zi)
    return out


# ---------------------------------------------------------------------------
# dispatch

if NUMBA_ENABLED:
    _max_lambda_numba = njit(cache=True)(_max_lambda_loop)
    _sweep_numba = njit(cache=True)(_sweep_loop)
    _cand_area_angle_numba = njit(cache=True)(_cand_area_angle_loop)
    _lag_filter_numba = njit(cache=True)(_lag_filter_loop)

    max_lambda = _max_lambda_numba
    sweep_max_transfer = _sweep_numba
    candidate_area_angles = _cand_area_angle_numba
    lag_filter = _lag_filter_numba
else:
    max_lambda = _max_lambda_numpy
    sweep_max_transfer = _sweep_numpy
    candidate_area_angles = _cand_area_angle_numpy
    lag_filter = _lag_filter_numpy
