"""Probability primitives for finite two-way channels.

Distributions and kernels are plain ``numpy`` arrays validated on entry.  A
two-way channel is stored as the joint transition matrix
``P(y1, y2 | x1, x2)`` with rows indexed ``(x1, x2)`` in x1-major order and
columns indexed ``(y1, y2)`` in y1-major order, i.e. row ``x1 * nx2 + x2``
and column ``y1 * ny2 + y2``.

All information quantities are in bits, with ``0 log 0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NegativeEntry,
    NonConvergence,
    OutOfRange,
    RowSumViolation,
)

#: Absolute tolerance for entrywise matrix comparisons.
MATRIX_TOL = 1e-9
#: Absolute tolerance for information quantities (bits).
INFO_TOL = 1e-8

Direction = Literal["to2", "to1"]


# ---------------------------------------------------------------------------
# validation helpers


def validate_dist(p, n: int | None = None, tol: float = MATRIX_TOL) -> np.ndarray:
    """Return ``p`` as a float vector after checking it is a pmf.

    Parameters
    ----------
    p : array_like
        Candidate probability vector.
    n : int, optional
        Required length.
    tol : float
        Allowed deviation of the total from one.

    Raises
    ------
    DimensionMismatch, NegativeEntry, RowSumViolation
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or (n is not None and arr.shape[0] != n):
        raise DimensionMismatch(f"expected a vector of length {n}, got shape {arr.shape}")
    neg = np.flatnonzero(arr < 0)
    if neg.size:
        raise NegativeEntry(0, int(neg[0]), float(arr[neg[0]]))
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise RowSumViolation(0, total)
    return arr


def validate_stochastic(m, shape: tuple[int, int] | None = None,
                        tol: float = MATRIX_TOL) -> np.ndarray:
    """Return ``m`` as a row-stochastic float matrix, without renormalizing."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or (shape is not None and arr.shape != tuple(shape)):
        raise DimensionMismatch(f"expected a matrix of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch("matrix contains non-finite entries")
    neg = np.argwhere(arr < 0)
    if neg.size:
        r, c = neg[0]
        raise NegativeEntry(int(r), int(c), float(arr[r, c]))
    sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise RowSumViolation(int(bad[0]), float(sums[bad[0]]))
    return arr


validate_kernel = validate_stochastic


def uniform(n: int) -> np.ndarray:
    """Uniform pmf on ``n`` symbols."""
    return np.full(n, 1.0 / n)


# ---------------------------------------------------------------------------
# the channel object


@dataclass(frozen=True)
class TwoWayChannel:
    """Joint transition law ``P(y1, y2 | x1, x2)`` of a memoryless two-way channel.

    Attributes
    ----------
    nx1, nx2, ny1, ny2 : int
        Alphabet sizes of the two inputs and the two outputs.
    p : ndarray, shape (nx1*nx2, ny1*ny2)
        Row-stochastic matrix in the x1-major / y1-major layout.
    """

    nx1: int
    nx2: int
    ny1: int
    ny2: int
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.p.setflags(write=False)

    @property
    def tensor(self) -> np.ndarray:
        """View of the law as an array indexed ``[x1, x2, y1, y2]``."""
        return self.p.reshape(self.nx1, self.nx2, self.ny1, self.ny2)

    @property
    def y1_law(self) -> np.ndarray:
        """``P(y1 | x1, x2)`` indexed ``[x1, x2, y1]``."""
        return self.tensor.sum(axis=3)

    @property
    def y2_law(self) -> np.ndarray:
        """``P(y2 | x1, x2)`` indexed ``[x1, x2, y2]``."""
        return self.tensor.sum(axis=2)

    def kernels(self, direction: Direction) -> np.ndarray:
        """Stack of all state-sliced marginal kernels for one direction.

        ``"to2"`` gives ``[P(y2 | . , x2)]`` indexed ``[x2, x1, y2]``;
        ``"to1"`` gives ``[P(y1 | x1, .)]`` indexed ``[x1, x2, y1]``.
        """
        if direction == "to2":
            return np.ascontiguousarray(self.y2_law.transpose(1, 0, 2))
        if direction == "to1":
            return np.ascontiguousarray(self.y1_law)
        raise OutOfRange(f"unknown direction {direction!r}")

    def swapped(self) -> "TwoWayChannel":
        """The same channel with the roles of users 1 and 2 exchanged."""
        t = self.tensor.transpose(1, 0, 3, 2)
        return TwoWayChannel(self.nx2, self.nx1, self.ny2, self.ny1,
                             np.ascontiguousarray(t.reshape(self.nx2 * self.nx1, -1)))


def validate_channel(matrix, nx1: int, nx2: int, ny1: int, ny2: int,
                     tol: float = MATRIX_TOL) -> TwoWayChannel:
    """Check a raw joint transition matrix and wrap it as a :class:`TwoWayChannel`.

    The matrix is never renormalized; any row whose sum is off by more than
    ``tol`` is rejected.

    Raises
    ------
    DimensionMismatch, NegativeEntry, RowSumViolation
    """
    for name, n in (("nx1", nx1), ("nx2", nx2), ("ny1", ny1), ("ny2", ny2)):
        if int(n) != n or n < 1:
            raise DimensionMismatch(f"{name} must be a positive integer, got {n!r}")
    arr = validate_stochastic(matrix, (nx1 * nx2, ny1 * ny2), tol)
    return TwoWayChannel(int(nx1), int(nx2), int(ny1), int(ny2), arr.copy())


def channel_from_marginals(k_y1: np.ndarray, k_y2: np.ndarray) -> TwoWayChannel:
    """Build the conditionally independent joint law ``P(y1|x)P(y2|x)``.

    Parameters
    ----------
    k_y1 : ndarray, shape (nx1, nx2, ny1)
    k_y2 : ndarray, shape (nx1, nx2, ny2)
    """
    k_y1 = np.asarray(k_y1, dtype=float)
    k_y2 = np.asarray(k_y2, dtype=float)
    if k_y1.shape[:2] != k_y2.shape[:2]:
        raise DimensionMismatch("marginal laws disagree on the input alphabets")
    nx1, nx2, ny1 = k_y1.shape
    ny2 = k_y2.shape[2]
    joint = np.einsum("abi,abj->abij", k_y1, k_y2).reshape(nx1 * nx2, ny1 * ny2)
    return validate_channel(joint, nx1, nx2, ny1, ny2)


def marginal_kernel(channel: TwoWayChannel, direction: Direction, symbol: int) -> np.ndarray:
    """One state-sliced marginal kernel.

    ``direction="to2"`` with ``symbol=x2`` returns ``[P(y2 | ., x2)]`` (rows
    x1); ``direction="to1"`` with ``symbol=x1`` returns ``[P(y1 | x1, .)]``
    (rows x2).

    Raises
    ------
    IndexOutOfRange
        If ``symbol`` is not a valid conditioning symbol.
    """
    stack = channel.kernels(direction)
    if not 0 <= symbol < stack.shape[0]:
        raise IndexOutOfRange(f"conditioning symbol {symbol} outside 0..{stack.shape[0] - 1}")
    return stack[symbol].copy()


# ---------------------------------------------------------------------------
# entropies


def _plogp(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def entropy(p, axis: int = -1) -> np.ndarray | float:
    """Shannon entropy in bits along ``axis``."""
    h = -_plogp(p).sum(axis=axis)
    return float(h) if np.ndim(h) == 0 else h


def binary_entropy(x: float) -> float:
    """Binary entropy ``H_b(x)`` in bits.

    Raises
    ------
    OutOfRange
        If ``x`` is outside ``[0, 1]``.
    """
    if not 0.0 <= x <= 1.0:
        raise OutOfRange(f"binary entropy argument {x} outside [0, 1]")
    return entropy(np.array([x, 1.0 - x]))


def qary_entropy(x: float, q: int) -> float:
    """``H_q(x) = x log2(q-1) + H_b(x)``, the entropy of a symbol that is
    correct with probability ``1-x`` and otherwise uniform over ``q-1`` errors."""
    if q < 2:
        raise OutOfRange(f"q must be at least 2, got {q}")
    return x * np.log2(q - 1) + binary_entropy(x)


# ---------------------------------------------------------------------------
# divergences and mutual information


def divergence_rows(k: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``D(k[x] || q)`` in bits for every row ``x``.

    Entries with ``k = 0`` contribute zero; a positive ``k`` against a zero
    reference gives ``inf``.
    """
    k = np.asarray(k, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(k > 0, k * (np.log2(np.where(k > 0, k, 1.0))
                                     - np.log2(np.where(q > 0, q, 0.0))), 0.0)
    return terms.sum(axis=-1)


def mutual_information(p_x, k) -> float:
    """``I(P_X, K) = sum_x sum_y P(x) K(y|x) log2(K(y|x) / sum_x' P(x') K(y|x'))``.

    Raises
    ------
    DimensionMismatch
        If the lengths of ``p_x`` and the rows of ``k`` disagree.
    """
    p_x = np.asarray(p_x, dtype=float)
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or p_x.shape != (k.shape[0],):
        raise DimensionMismatch(f"input of shape {p_x.shape} vs kernel of shape {k.shape}")
    return float(mutual_information_batch(p_x[None, :], k)[0])


def mutual_information_batch(p: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Vectorized ``I(P, K)`` for many inputs and/or many kernels.

    Parameters
    ----------
    p : ndarray, shape (..., nx)
    k : ndarray, shape (..., nx, ny)
        Leading dimensions broadcast against each other.

    Returns
    -------
    ndarray
        Mutual information in bits with the broadcast leading shape.
    """
    p = np.asarray(p, dtype=float)
    k = np.asarray(k, dtype=float)
    q = np.einsum("...x,...xy->...y", p, k)
    # I = H(Y) - H(Y|X)
    h_y = -_plogp(q).sum(axis=-1)
    h_rows = -_plogp(k).sum(axis=-1)
    h_y_x = np.einsum("...x,...x->...", p, h_rows)
    return np.maximum(h_y - h_y_x, 0.0)


def conditional_mutual_information(p_joint, channel: TwoWayChannel,
                                   direction: Direction) -> float:
    """``I(X1;Y2|X2)`` (``"to2"``) or ``I(X2;Y1|X1)`` (``"to1"``) under a joint input.

    Parameters
    ----------
    p_joint : array_like, shape (nx1, nx2)
        Joint input pmf ``P(x1, x2)``.
    """
    p_joint = np.asarray(p_joint, dtype=float)
    if p_joint.shape != (channel.nx1, channel.nx2):
        raise DimensionMismatch(
            f"joint input of shape {p_joint.shape} vs alphabets {(channel.nx1, channel.nx2)}")
    return float(rate_pair(p_joint, channel)[0 if direction == "to2" else 1])


def rate_pair(p_joint: np.ndarray, channel: TwoWayChannel) -> np.ndarray:
    """``(I(X1;Y2|X2), I(X2;Y1|X1))`` for a joint input ``P(x1, x2)``."""
    p = np.asarray(p_joint, dtype=float)
    r1 = _cond_mi(p.T, channel.kernels("to2"))
    r2 = _cond_mi(p, channel.kernels("to1"))
    return np.array([r1, r2])


def _cond_mi(p_sx: np.ndarray, kernels: np.ndarray) -> float:
    """``sum_s P(s) I(P(.|s), K_s)`` given ``P`` indexed ``[s, x]`` and kernels ``[s, x, y]``."""
    ps = p_sx.sum(axis=1)
    total = 0.0
    for s in np.flatnonzero(ps > 0):
        total += ps[s] * mutual_information_batch(p_sx[s] / ps[s], kernels[s])
    return float(total)


# ---------------------------------------------------------------------------
# Blahut-Arimoto


@dataclass(frozen=True)
class CapacityResult:
    """Outcome of a Blahut-Arimoto run.

    Attributes
    ----------
    capacity : float
        Mutual information of the final iterate, in bits.
    maximizer : ndarray
        Final input pmf.
    iterations : int
        Number of updates performed.
    gap : float
        Certified duality gap ``max_x D(K_x || Q) - I``; the true capacity
        lies in ``[capacity, capacity + gap]``.
    history : ndarray
        Mutual information of every iterate, starting with the initial one.
    """

    capacity: float
    maximizer: np.ndarray
    iterations: int
    gap: float
    history: np.ndarray = field(repr=False)

    def __iter__(self):
        # allows ``cap, p, n = blahut_arimoto(...)``
        return iter((self.capacity, self.maximizer, self.iterations))


def blahut_arimoto(k, tol: float = 1e-10, max_iter: int = 100_000,
                   p0=None) -> CapacityResult:
    """Capacity of a discrete memoryless channel by Blahut-Arimoto iteration.

    Starts from the uniform input (or ``p0``) and stops once the duality gap
    ``max_x D(K_x || Q_Y) - I(P, K)`` is at most ``tol``.

    Parameters
    ----------
    k : array_like, shape (nx, ny)
        Row-stochastic kernel.
    tol : float
        Target duality gap in bits.
    max_iter : int
        Iteration cap.
    p0 : array_like, optional
        Starting input pmf with full support.

    Raises
    ------
    NonConvergence
        If the gap is still above ``tol`` after ``max_iter`` updates.
    """
    if tol <= 0:
        raise OutOfRange("tol must be positive")
    k = validate_kernel(k)
    nx = k.shape[0]
    p = uniform(nx) if p0 is None else validate_dist(p0, nx).copy()
    # rows that are exactly zero contribute nothing; keep log finite
    logk = np.log2(np.where(k > 0, k, 1.0))

    def divergences(p):
        q = p @ k
        logq = np.log2(np.where(q > 0, q, 1.0))
        return np.where(k > 0, k * (logk - logq), 0.0).sum(axis=1)

    history = []
    d = divergences(p)
    info = float(p @ d)
    # eta = 1 is the classical update; longer steps p * 2**(eta d) are tried
    # first and kept only when they do not decrease I, which speeds up nearly
    # useless channels where the classical iteration crawls
    eta = 1.0
    for it in range(max_iter + 1):
        history.append(info)
        gap = float(d.max() - info)
        if gap <= tol:
            return CapacityResult(max(info, 0.0), p, it, max(gap, 0.0), np.array(history))
        if it == max_iter:
            break
        while True:
            # shift by the max for numerical safety; normalization removes it
            w = p * np.exp2(eta * (d - d.max()))
            p_new = w / w.sum()
            d_new = divergences(p_new)
            info_new = float(p_new @ d_new)
            # near the optimum I is flat below round-off, so acceptance there
            # relies on concavity: a nonnegative slope at p_new proves ascent
            if eta == 1.0 or info_new > info + 1e-13 or (
                    info_new >= info - 1e-15 and float((d_new - info_new) @ (p_new - p)) >= 0):
                break
            eta = max(1.0, eta / 2)
        p, d, info = p_new, d_new, info_new
        eta = min(eta * 2, 1e6)
    raise NonConvergence(f"Blahut-Arimoto did not reach gap {tol} in {max_iter} iterations",
                         gap=gap)


def uniform_kkt_test(k, tol: float = INFO_TOL) -> bool:
    """True iff the uniform input satisfies the capacity KKT conditions.

    That is, ``D(K_x || Q_U)`` is the same for every row ``x`` within ``tol``,
    where ``Q_U`` is the output law under the uniform input.
    """
    k = validate_kernel(k)
    q = uniform(k.shape[0]) @ k
    d = divergence_rows(k, q)
    return bool(d.max() - d.min() <= tol)


def total_variation(p, q) -> float:
    """Total-variation distance ``0.5 * sum |p - q|``."""
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())
