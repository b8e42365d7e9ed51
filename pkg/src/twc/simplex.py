"""Probability-simplex utilities: sampling, grids, projection and concave ascent."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Callable

import numpy as np

from .errors import NonConvergence

# smallest coordinate kept by the mirror-ascent iterates; far below any
# reported precision but well inside the normal float range
_FLOOR = 1e-250


def rng_stream(seed: int, *tags: int) -> np.random.Generator:
    """Independent generator for the substream ``(seed, *tags)``.

    Trials draw from ``rng_stream(seed, tag, i)`` so that serial and parallel
    runs see identical samples.
    """
    return np.random.default_rng([int(seed), *map(int, tags)])


def sample_simplex(rng: np.random.Generator, n: int, size: int | None = None) -> np.ndarray:
    """Uniform draws from the simplex: unit exponentials normalized to sum one."""
    shape = (n,) if size is None else (size, n)
    e = rng.exponential(size=shape)
    return e / e.sum(axis=-1, keepdims=True)


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """All pmfs on ``n`` symbols whose entries are multiples of ``1/resolution``.

    Returns an array of shape ``(C(resolution+n-1, n-1), n)``.  Vertices come
    first for ``n = 2`` ordering by decreasing mass on symbol 0.
    """
    if n == 1:
        return np.ones((1, 1))
    pts = np.empty((comb(resolution + n - 1, n - 1), n))
    for i, bars in enumerate(combinations(range(resolution + n - 1), n - 1)):
        edges = (-1,) + bars + (resolution + n - 1,)
        pts[i] = np.diff(edges) - 1
    return pts / resolution


def grid_size(n: int, resolution: int) -> int:
    """Number of points returned by :func:`simplex_grid`."""
    return comb(resolution + n - 1, n - 1)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u * k > css - 1)[0][-1]
    theta = (css[rho] - 1) / (rho + 1)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class AscentResult:
    """Outcome of :func:`maximize_concave`.

    ``gap`` is the Frank-Wolfe gap ``max_i g_i - <x, g>``, an upper bound on
    the distance to the optimum for a concave objective.
    """

    x: np.ndarray
    value: float
    gap: float
    iterations: int


def maximize_concave(fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
                     x0: np.ndarray, tol: float = 1e-9, max_iter: int = 20_000,
                     step: float = 1.0, raise_on_fail: bool = True) -> AscentResult:
    """Maximize a concave function over the simplex by mirror ascent.

    Each step is the entropic (multiplicative) projection of a gradient step,
    ``x <- x * exp(eta * g) / Z``, with the step ``eta`` chosen by Armijo
    backtracking.  Iteration stops once the Frank-Wolfe gap certifies the
    value to within ``tol``.

    Parameters
    ----------
    fun : callable
        Returns ``(value, gradient)`` at a point of the simplex.
    x0 : ndarray
        Starting point; boundary points are nudged into the interior.
    tol : float
        Target certified gap.
    max_iter : int
        Iteration cap.
    step : float
        Initial step size.
    raise_on_fail : bool
        Raise :class:`NonConvergence` when the cap is hit; otherwise return
        the last iterate with its gap.
    """
    x = np.asarray(x0, dtype=float).copy()
    x /= x.sum()
    if np.any(x <= 0):
        # multiplicative steps cannot leave a face, so start just inside it
        x = (1 - 1e-9) * x + 1e-9 / x.size
    f, g = fun(x)
    eta = step
    gap = np.inf
    for it in range(max_iter):
        g = np.where(np.isfinite(g), g, 1e6)
        gap = float(g.max() - x @ g)
        if gap <= tol:
            return AscentResult(x, float(f), max(gap, 0.0), it)
        first = True
        while True:
            z = eta * (g - g.max())
            y = np.maximum(x * np.exp(z), _FLOOR)
            y /= y.sum()
            fy, gy = fun(y)
            if abs(fy - f) <= 1e-12 * max(1.0, abs(f)):
                # f is flat to round-off here; concavity certifies ascent
                # exactly when the directional derivative at y is nonnegative
                # (centering the gradient removes the cancellation error of
                # its constant part, which is irrelevant on the simplex)
                gy_ok = np.where(np.isfinite(gy), gy, 1e6)
                if float((gy_ok - gy_ok @ y) @ (y - x)) >= 0:
                    break
            elif fy >= f + 1e-4 * float(g @ (y - x)):
                break
            eta *= 0.5
            first = False
            if eta < 1e-12:
                # no ascent direction left at working precision
                return _finish(x, f, gap, it, tol, raise_on_fail)
        x, f, g = y, fy, gy
        # grow the step only after an unhindered step; never start a line
        # search below the initial step, so round-off rejections cannot
        # shrink later steps for good
        eta = min(max(eta * 2.0 if first else eta, step), 1e4)
    return _finish(x, f, gap, max_iter, tol, raise_on_fail)


def maximize_concave_batch(fun, x0: np.ndarray, tol: float = 1e-9, max_iter: int = 20_000,
                           step: float = 1.0, raise_on_fail: bool = True) -> list[AscentResult]:
    """Run :func:`maximize_concave` from several starts at once.

    Parameters
    ----------
    fun : callable
        ``fun(X, rows)`` maps points ``X`` of shape ``(k, n)`` belonging to
        the starts ``rows`` to ``(values (k,), gradients (k, n))``.
    x0 : ndarray, shape (S, n)
        Starting points, one per row.

    Returns
    -------
    list of AscentResult
        One result per start, in order.
    """
    x = np.asarray(x0, dtype=float).copy()
    x /= x.sum(axis=1, keepdims=True)
    x = np.where((x <= 0).any(axis=1, keepdims=True), (1 - 1e-9) * x + 1e-9 / x.shape[1], x)
    n_s = x.shape[0]
    f, g = fun(x, np.arange(n_s))
    eta = np.full(n_s, float(step))
    active = np.ones(n_s, bool)
    iters = np.zeros(n_s, int)
    gap = np.full(n_s, np.inf)
    stalled = np.zeros(n_s, bool)
    for _ in range(max_iter):
        g = np.where(np.isfinite(g), g, 1e6)
        gap = g.max(axis=1) - (x * g).sum(axis=1)
        active &= gap > tol
        if not active.any():
            break
        pending = active.copy()
        first = active.copy()
        y = x.copy()
        fy, gy = f.copy(), g.copy()
        while pending.any():
            idx = np.flatnonzero(pending)
            z = eta[idx, None] * (g[idx] - g[idx].max(axis=1, keepdims=True))
            # keep every coordinate positive: an exact zero can never regrow under
            # multiplicative steps and leaves conditional laws undefined
            yt = np.maximum(x[idx] * np.exp(z), _FLOOR)
            yt /= yt.sum(axis=1, keepdims=True)
            ft, gt = fun(yt, idx)
            flat = np.abs(ft - f[idx]) <= 1e-12 * np.maximum(1.0, np.abs(f[idx]))
            gt_ok = np.where(np.isfinite(gt), gt, 1e6)
            centered = gt_ok - (gt_ok * yt).sum(axis=1, keepdims=True)
            slope_ok = (centered * (yt - x[idx])).sum(axis=1) >= 0
            armijo = ft >= f[idx] + 1e-4 * (g[idx] * (yt - x[idx])).sum(axis=1)
            ok = np.where(flat, slope_ok, armijo)
            acc = idx[ok]
            y[acc], fy[acc], gy[acc] = yt[ok], ft[ok], gt[ok]
            pending[acc] = False
            rej = idx[~ok]
            eta[rej] *= 0.5
            first[rej] = False
            dead = rej[eta[rej] < 1e-12]
            stalled[dead] = True
            active[dead] = False
            pending[dead] = False
        moved = active.copy()
        x[moved], f[moved], g[moved] = y[moved], fy[moved], gy[moved]
        iters[moved] += 1
        eta[moved] = np.minimum(np.maximum(np.where(first[moved], 2.0, 1.0) * eta[moved], step), 1e4)
    out = []
    for i in range(n_s):
        if gap[i] <= tol:
            out.append(AscentResult(x[i], float(f[i]), max(float(gap[i]), 0.0), int(iters[i])))
        else:
            out.append(_finish(x[i], f[i], gap[i], int(iters[i]), tol, raise_on_fail))
    return out


def _finish(x, f, gap, it, tol, raise_on_fail):
    # stalls a hair above tol are round-off, not real non-convergence
    if gap <= max(tol, 1e-12) * 10 or not raise_on_fail:
        return AscentResult(x, float(f), max(float(gap), 0.0), it)
    raise NonConvergence(f"concave ascent stopped with gap {gap:.3g} > {tol:.3g}", gap=gap)


@dataclass(frozen=True)
class MaximinResult:
    """Outcome of :func:`maximin_concave`.

    ``primal`` is ``min_i f_i(x)`` at the returned ``x`` (a lower bound on
    the maximin value) and ``dual`` a certified upper bound obtained from
    a weighting ``w`` of the objectives.
    """

    x: np.ndarray
    primal: float
    dual: float
    weights: np.ndarray


def maximin_concave(funs, x0: np.ndarray, tol: float = 1e-9, target: float | None = None,
                    max_outer: int = 200) -> MaximinResult:
    """Maximize ``min_i f_i(x)`` over the simplex for concave ``f_i``.

    Uses the minimax identity ``max_x min_i f_i = min_w max_x sum_i w_i f_i``
    (weights ``w`` on the simplex).  Every weighted subproblem is solved by
    :func:`maximize_concave`; its certified value bounds the maximin from
    above, and the best point found bounds it from below.

    Parameters
    ----------
    funs : sequence of callables
        Each returns ``(value, gradient)``.
    x0 : ndarray
        Starting point.
    tol : float
        Stop once ``dual - primal <= tol``.
    target : float, optional
        Stop as soon as the primal bound reaches ``target`` or the dual
        bound drops below it.
    max_outer : int
        Cap on the number of weighted subproblems.
    """
    m = len(funs)
    inner_tol = max(tol * 0.1, 1e-13)

    def evaluate(x):
        return np.array([f(x)[0] for f in funs])

    def solve(w, xstart):
        def fun(x):
            val, grad = 0.0, 0.0
            for wi, f in zip(w, funs):
                if wi > 0:
                    v, g = f(x)
                    val += wi * v
                    grad = grad + wi * g
            if np.isscalar(grad):
                grad = np.zeros_like(x)
            return val, grad
        r = maximize_concave(fun, xstart, tol=inner_tol, raise_on_fail=False)
        return r.x, r.value + r.gap, evaluate(r.x)

    best_x = np.asarray(x0, float) / np.sum(x0)
    best_primal = float(evaluate(best_x).min())
    best_dual = np.inf
    best_w = np.full(m, 1.0 / m)

    def done():
        if best_dual - best_primal <= tol:
            return True
        if target is not None and (best_primal >= target or best_dual < target):
            return True
        return False

    if done():
        return MaximinResult(best_x, best_primal, best_dual, best_w)

    if m == 1:
        x, ub, vals = solve(np.ones(1), best_x)
        return MaximinResult(x, float(vals[0]), ub, np.ones(1))

    if m == 2:
        # V(t) = max_x t f0 + (1-t) f1 is convex in t: golden-section search
        cache = {}

        def V(t, xstart):
            x, ub, vals = solve(np.array([t, 1 - t]), xstart)
            cache[t] = (x, vals)
            return ub

        lo, hi = 0.0, 1.0
        invphi = (np.sqrt(5) - 1) / 2
        a = hi - invphi * (hi - lo)
        b = lo + invphi * (hi - lo)
        xs = best_x
        fa, fb = V(a, xs), V(b, xs)
        for t in (0.0, 1.0):
            V(t, xs)
        for _ in range(max_outer):
            for t, (x, vals) in cache.items():
                if vals.min() > best_primal:
                    best_primal, best_x = float(vals.min()), x
            ub_min = min(fa, fb)
            if ub_min < best_dual:
                best_dual = ub_min
                best_w = np.array([a, 1 - a]) if fa <= fb else np.array([b, 1 - b])
            best_x, best_primal = _mix_recover(funs, cache, best_x, best_primal)
            if done() or hi - lo < 1e-12:
                break
            if fa <= fb:
                hi, b, fb = b, a, fa
                a = hi - invphi * (hi - lo)
                fa = V(a, cache[b][0])
            else:
                lo, a, fa = a, b, fb
                b = lo + invphi * (hi - lo)
                fb = V(b, cache[a][0])
        return MaximinResult(best_x, best_primal, best_dual, best_w)

    # m >= 3: mirror descent on the weights with ergodic primal averaging
    w = np.full(m, 1.0 / m)
    x = best_x
    avg = np.zeros_like(best_x)
    total = 0.0
    for k in range(1, max_outer + 1):
        x, ub, vals = solve(w, x)
        if ub < best_dual:
            best_dual, best_w = ub, w.copy()
        step = 1.0 / np.sqrt(k)
        avg += step * x
        total += step
        for cand in (x, avg / total):
            cv = float(evaluate(cand).min())
            if cv > best_primal:
                best_primal, best_x = cv, cand.copy()
        if done():
            break
        spread = vals.max() - vals.min()
        eta = step / max(spread, 1e-12)
        w = w * np.exp(-eta * (vals - vals.min()))
        w /= w.sum()
    return MaximinResult(best_x, best_primal, best_dual, best_w)


def _mix_recover(funs, cache, best_x, best_primal):
    """Improve the primal point by mixing subproblem solutions whose
    objective gaps ``f0 - f1`` have opposite signs."""
    items = sorted(cache.items())
    for (t1, (x1, v1)), (t2, (x2, v2)) in zip(items, items[1:]):
        d1, d2 = v1[0] - v1[1], v2[0] - v2[1]
        if d1 * d2 >= 0:
            continue
        lo, hi = 0.0, 1.0
        for _ in range(60):
            s = 0.5 * (lo + hi)
            xm = (1 - s) * x1 + s * x2
            v = np.array([f(xm)[0] for f in funs])
            if (v[0] - v[1]) * d1 > 0:
                lo = s
            else:
                hi = s
        xm = (1 - 0.5 * (lo + hi)) * x1 + 0.5 * (lo + hi) * x2
        val = min(f(xm)[0] for f in funs)
        if val > best_primal:
            best_primal, best_x = float(val), xm
    return best_x, best_primal
