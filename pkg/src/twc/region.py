"""Shannon inner and outer bounds of a two-way channel as planar rate regions.

A region is stored as the vertex chain of its upper-right boundary, running
from ``(0, R2max)`` to ``(R1max, 0)`` with increasing ``R1``; the region is
the convex set below that chain in the nonnegative quadrant.  Regions are
computed from support values ``h(lam) = max lam*R1 + (1-lam)*R2``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import (
    TwoWayChannel,
    binary_entropy,
    qary_entropy,
    uniform,
    validate_dist,
)
from .errors import DimensionMismatch, NonConvergence, OutOfRange, ParameterOutOfRange
from .simplex import (
    grid_size,
    maximize_concave,
    maximize_concave_batch,
    rng_stream,
    sample_simplex,
    simplex_grid,
)

_TAG_OUTER = 21
_TAG_INNER = 22

#: Cap on the number of grid points per input simplex for the inner bound.
MAX_GRID_POINTS = 2_000


@dataclass(frozen=True)
class RegionOptions:
    """Numerical options for support and region computations.

    Attributes
    ----------
    grid : int
        Grid resolution per simplex dimension for the inner bound.
    n_starts : int
        Number of multistarts (inner refinements and outer restarts).
    tol : float
        Certified optimality gap of each concave ascent.
    agree_tol : float
        Outer restarts must agree within this tolerance.
    seed : int
        Seed for the random restarts.
    """

    grid: int = 50
    n_starts: int = 8
    tol: float = 1e-9
    agree_tol: float = 1e-6
    seed: int = 42


@dataclass(frozen=True)
class SupportSample:
    """Support value of a region in direction ``(lam, 1 - lam)``.

    Attributes
    ----------
    direction : float
        Weight ``lam`` of ``R1``.
    value : float
        ``max lam*R1 + (1-lam)*R2`` found.
    argmax : ndarray
        Input law attaining ``value``, indexed ``[x1, x2]``.
    rates : tuple of float
        ``(R1, R2)`` at ``argmax``.
    upper : float
        Certified upper bound on the support value (outer mode); equals
        ``value`` for inner mode, where no certificate exists.
    """

    direction: float
    value: float
    argmax: np.ndarray
    rates: tuple
    upper: float


@dataclass(frozen=True)
class RateRegion2D:
    """Convex, downward-closed planar rate region given by its boundary chain.

    Attributes
    ----------
    vertices : ndarray, shape (n, 2)
        Boundary vertices ``(R1, R2)`` sorted by increasing ``R1``, from
        ``(0, R2max)`` to ``(R1max, 0)``.  ``[(0, 0)]`` is the trivial region.
    samples : tuple of SupportSample
        Support samples the region was built from, if any.
    """

    vertices: np.ndarray
    samples: tuple = field(default=(), compare=False)

    @property
    def r1_max(self) -> float:
        return float(self.vertices[:, 0].max())

    @property
    def r2_max(self) -> float:
        return float(self.vertices[:, 1].max())

    def support(self, lam: float) -> float:
        """``max lam*R1 + (1-lam)*R2`` over the region."""
        return float((self.vertices @ np.array([lam, 1 - lam])).max())

    def contains_point(self, point, slack: float = 0.0) -> bool:
        """Whether ``point`` is within ``slack`` of the region."""
        return _distance_to_region(self.vertices, np.asarray(point, float)) <= slack

    def to_csv(self) -> str:
        """CSV text with header ``R1,R2`` and 9 significant digits."""
        return region_to_csv(self)


# ---------------------------------------------------------------------------
# rate functionals


class _RateModel:
    """Rates ``I(X1;Y2|X2)``, ``I(X2;Y1|X1)`` and their gradients for joint inputs."""

    def __init__(self, channel: TwoWayChannel):
        self.channel = channel
        self.k2 = channel.y2_law          # [x1, x2, y2]
        self.k1 = channel.y1_law          # [x1, x2, y1]
        # sum_y k log k per row; the rest of each divergence is a cross term
        self.negent2 = (self.k2 * np.log2(np.where(self.k2 > 0, self.k2, 1.0))).sum(axis=2)
        self.negent1 = (self.k1 * np.log2(np.where(self.k1 > 0, self.k1, 1.0))).sum(axis=2)

    def rates(self, p: np.ndarray):
        """``(R1, R2, D2, D1)`` with ``D2[a, b] = D(P(.|a,b) || Q_{Y2|x2=b})``.

        ``D2`` and ``D1`` are the gradients of ``R1`` and ``R2`` with respect
        to the joint ``p[a, b]``.  States of zero probability get a huge but
        finite gradient where the divergence would be infinite.  Leading
        batch axes are allowed, in which case the rates are arrays.
        """
        pb = p.sum(axis=-2)
        pa = p.sum(axis=-1)
        # P(a|b) and P(b|a) mixtures; rows of zero mass give an all-zero law
        m2 = np.einsum("...ab,aby->...by", p, self.k2) / np.where(pb > 0, pb, 1.0)[..., None]
        m1 = np.einsum("...ab,aby->...ay", p, self.k1) / np.where(pa > 0, pa, 1.0)[..., None]
        logq2 = np.log2(np.maximum(m2, 1e-300))
        logq1 = np.log2(np.maximum(m1, 1e-300))
        d2 = self.negent2 - np.einsum("aby,...by->...ab", self.k2, logq2)
        d1 = self.negent1 - np.einsum("aby,...ay->...ab", self.k1, logq1)
        r1 = (p * d2).sum(axis=(-2, -1))
        r2 = (p * d1).sum(axis=(-2, -1))
        if p.ndim == 2:
            return float(r1), float(r2), d2, d1
        return r1, r2, d2, d1

    def objective(self, lam: float):
        def fun(x):
            p = x.reshape(self.k2.shape[:2])
            r1, r2, d2, d1 = self.rates(p)
            return lam * r1 + (1 - lam) * r2, (lam * d2 + (1 - lam) * d1).ravel()
        return fun


def rate_pair_product(channel: TwoWayChannel, p1, p2) -> tuple[float, float]:
    """``(I(X1;Y2|X2), I(X2;Y1|X1))`` under the independent input ``p1 x p2``."""
    p1 = validate_dist(p1, channel.nx1)
    p2 = validate_dist(p2, channel.nx2)
    r1, r2, _, _ = _RateModel(channel).rates(np.outer(p1, p2))
    return r1, r2


# ---------------------------------------------------------------------------
# support values


def _check_lam(lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise OutOfRange(f"direction lam must lie in [0, 1], got {lam}")
    return float(lam)


def _grid_resolution(n: int, grid: int) -> int:
    res = grid
    while res > 1 and grid_size(n, res) > MAX_GRID_POINTS:
        res -= 1
    return res


def _mi_table(points: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """``T[g, s] = I(points[g], kernels[s])``."""
    from .core import mutual_information_batch
    return mutual_information_batch(points[:, None, :], kernels[None, :, :, :])


class _InnerSolver:
    """Grid search plus coordinate ascent over product inputs."""

    def __init__(self, channel: TwoWayChannel, opts: RegionOptions):
        self.model = _RateModel(channel)
        self.opts = opts
        self.g1 = simplex_grid(channel.nx1, _grid_resolution(channel.nx1, opts.grid))
        self.g2 = simplex_grid(channel.nx2, _grid_resolution(channel.nx2, opts.grid))
        # A[g1, x2] = I(P1_g, K2_x2);  B[g2, x1] = I(P2_g, K1_x1)
        self.a = _mi_table(self.g1, channel.kernels("to2"))
        self.b = _mi_table(self.g2, channel.kernels("to1"))
        # rate tables over the product grid
        self.r1 = self.a @ self.g2.T                # [g1, g2]
        self.r2 = self.g1 @ self.b.T                # [g1, g2]
        self.sep = 0.2

    def solve(self, lam: float, extra_starts=()) -> SupportSample:
        f = lam * self.r1 + (1 - lam) * self.r2
        order = np.argsort(f, axis=None)[::-1]
        # multistart from the best grid points, skipping points close to a
        # start already refined (they almost always share its basin)
        starts: list = [(np.asarray(a, float), np.asarray(b, float)) for a, b in extra_starts]
        seen: list = []
        for idx in order[: max(64, 8 * self.opts.n_starts)]:
            i, j = np.unravel_index(idx, f.shape)
            p1, p2 = self.g1[i], self.g2[j]
            if any(np.abs(p1 - a).max() <= self.sep and np.abs(p2 - b).max() <= self.sep
                   for a, b in seen):
                continue
            seen.append((p1, p2))
            starts.append((p1, p2))
            if len(seen) >= self.opts.n_starts:
                break
        best = None
        for p1, p2 in starts:
            cand = self._refine(lam, p1, p2)
            if best is None or cand[0] > best[0] + 1e-15:
                best = cand
        val, p1, p2 = best
        r1, r2, _, _ = self.model.rates(np.outer(p1, p2))
        val = lam * r1 + (1 - lam) * r2
        return SupportSample(lam, val, np.outer(p1, p2), (r1, r2), val)

    def _refine(self, lam, p1, p2, sweeps: int = 50):
        model = self.model

        def value(p1, p2):
            r1, r2, _, _ = model.rates(np.outer(p1, p2))
            return lam * r1 + (1 - lam) * r2

        cur = value(p1, p2)
        for _ in range(sweeps):
            old = cur

            def f1(x, p2=p2):
                r1, r2, d2, d1 = model.rates(np.outer(x, p2))
                return lam * r1 + (1 - lam) * r2, (lam * d2 + (1 - lam) * d1) @ p2

            r = maximize_concave(f1, p1, tol=self.opts.tol, raise_on_fail=False)
            if r.value > cur:
                p1, cur = r.x, r.value

            def f2(x, p1=p1):
                r1, r2, d2, d1 = model.rates(np.outer(p1, x))
                return lam * r1 + (1 - lam) * r2, p1 @ (lam * d2 + (1 - lam) * d1)

            r = maximize_concave(f2, p2, tol=self.opts.tol, raise_on_fail=False)
            if r.value > cur:
                p2, cur = r.x, r.value
            if cur - old <= 1e-13:
                break
        return cur, p1, p2


def _outer_supports(channel: TwoWayChannel, lams, opts: RegionOptions,
                    warms=None) -> list[SupportSample]:
    """Outer support values for several directions, all restarts in one batch."""
    model = _RateModel(channel)
    shape = (channel.nx1, channel.nx2)
    n = channel.nx1 * channel.nx2
    lams = np.asarray(lams, float)
    starts, owner = [], []
    for k, lam in enumerate(lams):
        rng = rng_stream(opts.seed, _TAG_OUTER, int(round(lam * 1e6)))
        own = [uniform(n)]
        if warms is not None and warms[k] is not None:
            own.insert(0, np.asarray(warms[k], float).ravel())
        n_random = max(opts.n_starts - len(own), 0)
        if n_random:
            own += list(sample_simplex(rng, n, n_random))
        starts += own
        owner += [k] * len(own)
    owner = np.array(owner)
    w = lams[owner]

    def fun(xs, rows):
        r1, r2, d2, d1 = model.rates(xs.reshape(-1, *shape))
        wr = w[rows]
        grad = wr[:, None, None] * d2 + (1 - wr)[:, None, None] * d1
        return wr * r1 + (1 - wr) * r2, grad.reshape(-1, n)

    results = maximize_concave_batch(fun, np.array(starts), tol=opts.tol)
    out = []
    for k, lam in enumerate(lams):
        mine = [r for r, o in zip(results, owner) if o == k]
        best = max(mine, key=lambda r: r.value)
        # each run is certified by its own gap; the tightest certificate wins
        upper = min(r.value + r.gap for r in mine)
        spread = best.value - min(r.value for r in mine)
        if spread > opts.agree_tol:
            raise NonConvergence(f"outer restarts disagree by {spread:.3g} at lam={lam}", gap=spread)
        p = best.x.reshape(shape)
        r1, r2, _, _ = model.rates(p)
        out.append(SupportSample(float(lam), best.value, p, (r1, r2), max(upper, best.value)))
    return out


def _outer_support(channel: TwoWayChannel, lam: float, opts: RegionOptions,
                   warm: np.ndarray | None = None) -> SupportSample:
    return _outer_supports(channel, [lam], opts, [warm])[0]


def support_value(channel: TwoWayChannel, lam: float, mode: str = "outer",
                  opts: RegionOptions | None = None) -> SupportSample:
    """Support value of Shannon's inner or outer bound in direction ``lam``.

    The objective ``lam*I(X1;Y2|X2) + (1-lam)*I(X2;Y1|X1)`` is maximized over
    joint inputs (``mode="outer"``), where it is concave, or over product
    inputs (``mode="inner"``), where it is not.

    Outer mode runs certified mirror ascent from several starts including the
    best product input; ``upper`` holds the certified bound.  Inner mode
    searches a grid of product inputs and refines the best ones by
    coordinate ascent (each block is concave); the value is a lower bound.

    Raises
    ------
    OutOfRange
        If ``lam`` is outside ``[0, 1]``.
    NonConvergence
    """
    lam = _check_lam(lam)
    opts = opts or RegionOptions()
    if mode not in ("inner", "outer"):
        raise ValueError(f"mode must be 'inner' or 'outer', got {mode!r}")
    inner = _InnerSolver(channel, opts).solve(lam)
    if mode == "inner":
        return inner
    return _outer_support(channel, lam, opts, warm=inner.argmax)


# ---------------------------------------------------------------------------
# polygon geometry


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def chain_from_points(points, tol: float = 1e-12) -> np.ndarray:
    """Upper-right boundary chain of the downward closure of the hull of ``points``."""
    pts = np.maximum(np.asarray(points, float).reshape(-1, 2), 0.0)
    r1max, r2max = pts[:, 0].max(initial=0.0), pts[:, 1].max(initial=0.0)
    if r1max <= tol and r2max <= tol:
        return np.zeros((1, 2))
    extra = np.array([[0.0, r2max], [r1max, 0.0]])
    pts = np.vstack([pts, extra])
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    pts = pts[order]
    hull: list = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= -tol:
            hull.pop()
        hull.append(tuple(p))
    # keep the part starting at the highest point on the R2 axis
    chain = [h for h in hull if h[0] > tol or h[1] >= r2max - tol]
    chain = [c for c in chain if not (c[0] <= tol and c[1] < r2max - tol)]
    out = np.array(chain)
    if out[-1, 1] > tol:
        out = np.vstack([out, [out[-1, 0], 0.0]])
    out[np.abs(out) <= tol] = 0.0
    return _drop_collinear(out, tol)


def _drop_collinear(chain: np.ndarray, tol: float) -> np.ndarray:
    if len(chain) <= 2:
        return chain
    keep = [chain[0]]
    for i in range(1, len(chain) - 1):
        if abs(_cross(keep[-1], chain[i], chain[i + 1])) > tol and \
                np.abs(chain[i] - keep[-1]).max() > tol:
            keep.append(chain[i])
    if np.abs(chain[-1] - keep[-1]).max() > tol or len(keep) == 1:
        keep.append(chain[-1])
    return np.array(keep)


def chain_from_supports(lams, values, tol: float = 1e-12) -> np.ndarray:
    """Boundary chain of ``{R >= 0 : lam*R1 + (1-lam)*R2 <= h(lam)}``."""
    lams = np.asarray(lams, float)
    values = np.maximum(np.asarray(values, float), 0.0)
    # lines a.R <= c, including the axes as R >= 0
    a = np.column_stack([lams, 1 - lams])
    a = np.vstack([a, [[-1.0, 0.0], [0.0, -1.0]]])
    c = np.concatenate([values, [0.0, 0.0]])
    pts = []
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            m = np.array([a[i], a[j]])
            det = np.linalg.det(m)
            if abs(det) < 1e-14:
                continue
            x = np.linalg.solve(m, [c[i], c[j]])
            if np.all(a @ x <= c + 1e-10 * (1 + np.abs(c))):
                pts.append(x)
    if not pts:
        return np.zeros((1, 2))
    return chain_from_points(np.array(pts), tol)


def _polygon(chain: np.ndarray) -> np.ndarray:
    """Closed counter-clockwise polygon of the region."""
    if len(chain) == 1 and not chain[0].any():
        return np.zeros((1, 2))
    poly = [np.zeros(2)] + [v for v in chain[::-1]]
    return np.array(poly)


def _seg_dist(p, a, b) -> float:
    ab = b - a
    den = ab @ ab
    t = 0.0 if den == 0 else float(np.clip((p - a) @ ab / den, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _distance_to_region(chain: np.ndarray, p: np.ndarray) -> float:
    poly = _polygon(chain)
    if len(poly) == 1:
        return float(np.linalg.norm(p))
    inside = True
    n = len(poly)
    for i in range(n):
        if _cross(poly[i], poly[(i + 1) % n], p) < 0:
            inside = False
            break
    if inside:
        return 0.0
    return min(_seg_dist(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def region_contains(a: RateRegion2D, b: RateRegion2D, slack: float = 1e-6) -> bool:
    """Whether region ``b`` lies inside region ``a`` up to ``slack``.

    Both regions are convex, so checking the vertices of ``b`` suffices.
    """
    return all(_distance_to_region(a.vertices, v) <= slack for v in b.vertices)


def _densify(chain: np.ndarray, per_segment: int = 200) -> np.ndarray:
    if len(chain) == 1:
        return chain
    pts = [chain[0]]
    for u, v in zip(chain[:-1], chain[1:]):
        t = np.linspace(0, 1, per_segment + 1)[1:, None]
        pts.extend(u + t * (v - u))
    return np.array(pts)


def _polyline_dist(p: np.ndarray, chain: np.ndarray) -> float:
    if len(chain) == 1:
        return float(np.linalg.norm(p - chain[0]))
    return min(_seg_dist(p, u, v) for u, v in zip(chain[:-1], chain[1:]))


def region_hausdorff(a: RateRegion2D, b: RateRegion2D) -> float:
    """Symmetric Hausdorff distance between the boundary chains of two regions."""
    d_ab = max(_polyline_dist(p, b.vertices) for p in _densify(a.vertices))
    d_ba = max(_polyline_dist(p, a.vertices) for p in _densify(b.vertices))
    return max(d_ab, d_ba)


# ---------------------------------------------------------------------------
# regions


def compute_region(channel: TwoWayChannel, mode: str = "inner", n_directions: int = 91,
                   opts: RegionOptions | None = None) -> RateRegion2D:
    """Shannon's inner or outer bound sampled on equispaced directions.

    Inner mode returns the hull of achieved rate pairs, so it lies inside the
    true inner bound.  Outer mode intersects the half-planes of the support
    values; between sampled directions it can overshoot the true outer bound
    by the discretization error.

    Raises
    ------
    OutOfRange
        If ``n_directions < 2``.
    """
    if n_directions < 2:
        raise OutOfRange(f"need at least 2 directions, got {n_directions}")
    if mode not in ("inner", "outer"):
        raise ValueError(f"mode must be 'inner' or 'outer', got {mode!r}")
    opts = opts or RegionOptions()
    lams = np.linspace(0.0, 1.0, n_directions)
    solver = _InnerSolver(channel, opts)
    inner = []
    for lam in lams:
        # the previous direction's optimum is a cheap, usually excellent start
        prev = [(inner[-1].argmax.sum(axis=1), inner[-1].argmax.sum(axis=0))] if inner else []
        inner.append(solver.solve(lam, prev))
    if mode == "inner":
        # every achieved pair is achievable; re-score each direction over all of them
        rates = np.array([s.rates for s in inner])
        samples = []
        for s in inner:
            vals = rates @ np.array([s.direction, 1 - s.direction])
            k = int(np.argmax(vals))
            if vals[k] > s.value:
                s = SupportSample(s.direction, float(vals[k]), inner[k].argmax,
                                  tuple(rates[k]), float(vals[k]))
            samples.append(s)
        return RateRegion2D(chain_from_points(rates), tuple(samples))
    samples = _outer_supports(channel, lams, opts, [s.argmax for s in inner])
    values = [s.value for s in samples]
    return RateRegion2D(chain_from_supports(lams, values), tuple(samples))


def capacity_under_common_maximizer(channel: TwoWayChannel, p_star,
                                    resolution: int = 200) -> RateRegion2D:
    """Hull of rate pairs under ``P* x P_X2`` over a grid of ``P_X2``.

    This is the capacity region when a common maximizer ``P*`` for user 1
    exists and user 2's direction is invariant.

    Raises
    ------
    DimensionMismatch
        If ``p_star`` does not live on user 1's alphabet.
    """
    p_star = np.asarray(p_star, float)
    if p_star.shape != (channel.nx1,):
        raise DimensionMismatch(f"P* must have length {channel.nx1}, got shape {p_star.shape}")
    p_star = validate_dist(p_star, channel.nx1)
    res = _grid_resolution(channel.nx2, resolution)
    grid = simplex_grid(channel.nx2, res)
    model = _RateModel(channel)
    rates = np.array([model.rates(np.outer(p_star, p2))[:2] for p2 in grid])
    return RateRegion2D(chain_from_points(rates))


def rectangle(r1: float, r2: float) -> RateRegion2D:
    """The region ``[0, r1] x [0, r2]``."""
    return RateRegion2D(chain_from_points([[max(r1, 0.0), max(r2, 0.0)]]))


def qary_erasure_rate(q: int, alpha: float, eps: float) -> float:
    """Capacity of ``Y = S (+)_q Z`` or erasure, with error mass ``alpha`` and erasure ``eps``.

    Given no erasure, the noise is nonzero with probability ``alpha/(1-eps)``
    spread evenly over the ``q-1`` nonzero values, so the rate is
    ``(1-eps) * (log2 q - H_q(alpha/(1-eps)))``.
    """
    if eps >= 1.0:
        return 0.0
    beta = min(alpha / (1.0 - eps), 1.0)
    return float((1.0 - eps) * (np.log2(q) - qary_entropy(beta, q)))


def closed_form_qary_erasure(q: int, a1: float, e1: float, a2: float, e2: float) -> RateRegion2D:
    """Capacity rectangle of the q-ary additive-noise two-way channel with erasures.

    ``R1 <= (1-e2)(log2 q - H_q(a2/(1-e2)))`` and symmetrically for ``R2``.

    Raises
    ------
    ParameterOutOfRange
    """
    if int(q) != q or q < 2:
        raise ParameterOutOfRange(f"q must be an integer >= 2, got {q}")
    for a, e in ((a1, e1), (a2, e2)):
        if a < 0 or e < 0 or a + e > 1 + 1e-12:
            raise ParameterOutOfRange(f"need alpha, eps >= 0 and alpha + eps <= 1, got ({a}, {e})")
    return rectangle(qary_erasure_rate(q, a2, e2), qary_erasure_rate(q, a1, e1))


def binary_erasure_rate(alpha: float, eps: float) -> float:
    """Binary special case ``(1-eps)(1 - H_b(alpha/(1-eps)))``."""
    if eps >= 1.0:
        return 0.0
    return float((1.0 - eps) * (1.0 - binary_entropy(min(alpha / (1.0 - eps), 1.0))))


def region_to_csv(region: RateRegion2D) -> str:
    """CSV text with header ``R1,R2``, one vertex per line, 9 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R1", "R2"])
    for r1, r2 in region.vertices:
        w.writerow([f"{r1:.9g}", f"{r2:.9g}"])
    return buf.getvalue()
