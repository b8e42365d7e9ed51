"""Two-way channels whose noise has memory.

Noise processes are modelled as irreducible finite-state Markov chains, the
implementable subclass of stationary ergodic processes for which entropy
rates are exact.  The module provides the capacity rectangles of
noise-invertible channels and of injective semi-deterministic channels with
memory, the single-letter outer bound for jointly Markov noise, and a
simulator of the adaptive scheme that beats non-adaptive coding when the
two noise processes are dependent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .core import MATRIX_TOL, entropy, validate_dist, validate_stochastic
from .errors import (
    DimensionMismatch,
    NotInjective,
    NotIrreducible,
    OutOfRange,
    StructuralViolation,
    UnsupportedLimit,
)
from .region import RateRegion2D, rectangle

#: Tolerance on ``pi T = pi`` for the stationary distribution.
STATIONARY_TOL = 1e-10


# ---------------------------------------------------------------------------
# Markov noise


def stationary_distribution(T: np.ndarray) -> np.ndarray:
    """Unique stationary pmf of an irreducible transition matrix.

    Solves ``pi (T - I) = 0`` together with ``sum(pi) = 1`` in the
    least-squares sense; the system has a unique solution for an
    irreducible chain.

    Raises
    ------
    NotIrreducible
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    n_comp, _ = connected_components(T > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise NotIrreducible(f"transition matrix has {n_comp} strongly connected classes")
    a = np.vstack([T.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class MarkovNoise:
    """Stationary irreducible Markov noise ``{Z_i}`` on ``{0, ..., n-1}``.

    Attributes
    ----------
    T : ndarray, shape (n, n)
        Row-stochastic transition matrix, ``T[s, t] = P(Z_{i+1}=t | Z_i=s)``.
    pi : ndarray, shape (n,)
        Stationary distribution, computed on construction.

    Raises
    ------
    NegativeEntry, RowSumViolation, DimensionMismatch, NotIrreducible
    """

    T: np.ndarray
    pi: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise DimensionMismatch(f"transition matrix must be square, got shape {T.shape}")
        T = validate_stochastic(T)
        pi = stationary_distribution(T)
        if np.abs(pi @ T - pi).max() > STATIONARY_TOL:
            raise NotIrreducible("stationary distribution could not be certified")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "pi", pi)

    @property
    def n_states(self) -> int:
        return self.T.shape[0]

    @classmethod
    def iid(cls, p) -> "MarkovNoise":
        """Memoryless noise with marginal ``p``."""
        p = validate_dist(p)
        if np.any(p <= 0):
            # restrict the chain to the support so it stays irreducible
            raise NotIrreducible("i.i.d. noise needs a fully supported marginal")
        return cls(np.tile(p, (p.size, 1)))

    @classmethod
    def two_state(cls, stay0: float, stay1: float | None = None) -> "MarkovNoise":
        """Binary chain staying in state 0 w.p. ``stay0`` and in 1 w.p. ``stay1``."""
        stay1 = stay0 if stay1 is None else stay1
        for s in (stay0, stay1):
            if not 0.0 <= s <= 1.0:
                raise OutOfRange(f"stay probability {s} outside [0, 1]")
        return cls(np.array([[stay0, 1 - stay0], [1 - stay1, stay1]]))

    def entropy_rate(self) -> float:
        """``sum_s pi(s) H(T[s])`` in bits per symbol."""
        return entropy_rate(self)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """A length-``n`` stationary sample path."""
        cum = np.cumsum(self.T, axis=1)
        u = rng.random(n)
        z = np.empty(n, dtype=int)
        s = int(np.searchsorted(np.cumsum(self.pi), u[0], side="right"))
        z[0] = min(s, self.n_states - 1)
        for i in range(1, n):
            s = int(np.searchsorted(cum[z[i - 1]], u[i], side="right"))
            z[i] = min(s, self.n_states - 1)
        return z


def entropy_rate(noise: MarkovNoise) -> float:
    """Entropy rate of a stationary Markov chain in bits per symbol.

    Examples
    --------
    >>> round(entropy_rate(MarkovNoise.two_state(0.9)), 6)
    0.468996
    """
    return float(noise.pi @ entropy(noise.T, axis=1))


@dataclass(frozen=True)
class JointMarkovNoise:
    """Jointly Markov noise pair ``{(Z1_i, Z2_i)}``.

    The product state ``(z1, z2)`` is encoded as ``z1 * n2 + z2``.

    Attributes
    ----------
    n1, n2 : int
        Component alphabet sizes.
    chain : MarkovNoise
        Chain on the ``n1 * n2`` product states.
    """

    n1: int
    n2: int
    chain: MarkovNoise

    def __post_init__(self):
        if self.chain.n_states != self.n1 * self.n2:
            raise DimensionMismatch(
                f"chain has {self.chain.n_states} states, expected {self.n1} x {self.n2}")

    @classmethod
    def from_transition(cls, T, n1: int, n2: int) -> "JointMarkovNoise":
        return cls(n1, n2, MarkovNoise(T))

    @classmethod
    def independent(cls, noise1: MarkovNoise, noise2: MarkovNoise) -> "JointMarkovNoise":
        """Product of two independent chains."""
        return cls(noise1.n_states, noise2.n_states, MarkovNoise(np.kron(noise1.T, noise2.T)))

    def _tensor(self) -> np.ndarray:
        n1, n2 = self.n1, self.n2
        return self.chain.T.reshape(n1, n2, n1, n2)

    def conditional_entropy(self, side: int) -> float:
        """``H(Z_side,i | Z1_{i-1}, Z2_{i-1})`` at stationarity.

        For a jointly Markov pair this equals the conditional entropy given
        the whole past.
        """
        t = self._tensor()
        if side == 1:
            nxt = t.sum(axis=3)
        elif side == 2:
            nxt = t.sum(axis=2)
        else:
            raise OutOfRange(f"side must be 1 or 2, got {side}")
        rows = nxt.reshape(self.n1 * self.n2, -1)
        return float(self.chain.pi @ entropy(rows, axis=1))

    def factorizes(self, tol: float = MATRIX_TOL) -> tuple[MarkovNoise, MarkovNoise] | None:
        """The component chains if the pair is a product of independent chains."""
        t = self._tensor()
        t1 = t.sum(axis=3)[:, 0, :]      # [a, c] from state (a, 0)
        t2 = t.sum(axis=2)[0, :, :]      # [b, d] from state (0, b)
        prod = np.einsum("ac,bd->abcd", t1, t2)
        if np.abs(prod - t).max() > tol:
            return None
        try:
            return MarkovNoise(t1), MarkovNoise(t2)
        except NotIrreducible:
            return None


# ---------------------------------------------------------------------------
# channel specifications


def _check_table(table, shape_prefix: tuple[int, ...], name: str) -> np.ndarray:
    arr = np.asarray(table)
    if arr.ndim != len(shape_prefix) + 1 or arr.shape[:-1] != shape_prefix:
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape_prefix} + (n,)")
    if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0:
        raise DimensionMismatch(f"{name} must hold non-negative integer symbols")
    return arr.astype(int)


def _injective_rows(table: np.ndarray, name: str) -> None:
    flat = table.reshape(-1, table.shape[-1])
    for idx, row in enumerate(flat):
        if np.unique(row).size != row.size:
            raise NotInjective(name, idx)


@dataclass(frozen=True)
class MemoryChannelSpec:
    """Channel ``Y_j = F_j(X1, X2, Z_j)`` driven by noise with memory.

    Attributes
    ----------
    F1 : ndarray of int, shape (nx1, nx2, nz1)
        Output table of user 1.
    F2 : ndarray of int, shape (nx1, nx2, nz2)
        Output table of user 2.
    noise : tuple of MarkovNoise or JointMarkovNoise
        Independent per-side chains ``(noise1, noise2)`` or a joint chain.
    q1, q2 : int
        Nominal alphabet sizes, ``|X2| = |Y1| = |Z1| = q1`` and
        ``|X1| = |Y2| = |Z2| = q2`` when the rectangle theorem applies.
    ny1, ny2 : int, optional
        Output alphabet sizes; default to one more than the largest entry.

    Raises
    ------
    DimensionMismatch, NotInjective
        If a table is malformed or ``F_j(x1, x2, .)`` is not one-to-one.
    """

    F1: np.ndarray
    F2: np.ndarray
    noise: object
    q1: int
    q2: int
    ny1: int | None = None
    ny2: int | None = None

    def __post_init__(self):
        f1 = np.asarray(self.F1)
        if f1.ndim != 3:
            raise DimensionMismatch(f"F1 must be 3-dimensional, got shape {f1.shape}")
        f1 = _check_table(f1, f1.shape[:2], "F1")
        f2 = _check_table(self.F2, f1.shape[:2], "F2")
        _injective_rows(f1, "F1")
        _injective_rows(f2, "F2")
        object.__setattr__(self, "F1", f1)
        object.__setattr__(self, "F2", f2)
        object.__setattr__(self, "ny1", self.ny1 or int(f1.max()) + 1)
        object.__setattr__(self, "ny2", self.ny2 or int(f2.max()) + 1)
        n1, n2 = f1.shape[2], f2.shape[2]
        if isinstance(self.noise, JointMarkovNoise):
            if (self.noise.n1, self.noise.n2) != (n1, n2):
                raise DimensionMismatch("joint noise alphabets do not match the tables")
        else:
            noise1, noise2 = self.noise
            if (noise1.n_states, noise2.n_states) != (n1, n2):
                raise DimensionMismatch("noise alphabets do not match the tables")

    def independent_noises(self) -> tuple[MarkovNoise, MarkovNoise] | None:
        """Per-side chains if the noise processes are mutually independent."""
        if isinstance(self.noise, JointMarkovNoise):
            return self.noise.factorizes()
        return tuple(self.noise)


def _inverse_table(f: np.ndarray, ny: int) -> np.ndarray:
    """``z = F^{-1}(x1, x2, y)``, or ``-1`` where ``y`` is unreachable."""
    inv = np.full(f.shape[:2] + (ny,), -1, dtype=int)
    a, b, z = np.indices(f.shape)
    inv[a, b, f] = z
    return inv


def _one_to_one_in(inv: np.ndarray, axis: int) -> bool:
    """Whether ``inv`` is injective along ``axis`` for every fixed other index."""
    moved = np.moveaxis(inv, axis, -1).reshape(-1, inv.shape[axis])
    return all(np.unique(row).size == row.size and row.min() >= 0 for row in moved)


def check_theorem9_hypotheses(spec: MemoryChannelSpec) -> tuple[MarkovNoise, MarkovNoise]:
    """Verify the structural hypotheses of the noise-invertible capacity rectangle.

    Returns
    -------
    tuple of MarkovNoise
        The two independent noise chains.

    Raises
    ------
    StructuralViolation
        Naming the first hypothesis that fails.
    """
    nx1, nx2, nz1 = spec.F1.shape
    nz2 = spec.F2.shape[2]
    if not nx2 == spec.ny1 == nz1 == spec.q1:
        raise StructuralViolation("|X2| = |Y1| = |Z1| = q1")
    if not nx1 == spec.ny2 == nz2 == spec.q2:
        raise StructuralViolation("|X1| = |Y2| = |Z2| = q2")
    # F1^{-1}(x1, x2, y1) one-to-one in x2; F2^{-1}(x1, x2, y2) one-to-one in x1
    if not _one_to_one_in(_inverse_table(spec.F1, spec.ny1), axis=1):
        raise StructuralViolation("F1 inverse one-to-one in x2")
    if not _one_to_one_in(_inverse_table(spec.F2, spec.ny2), axis=0):
        raise StructuralViolation("F2 inverse one-to-one in x1")
    noises = spec.independent_noises()
    if noises is None:
        raise StructuralViolation("noise processes mutually independent")
    return noises


def theorem9_region(spec: MemoryChannelSpec) -> RateRegion2D:
    """Capacity rectangle of a noise-invertible two-way channel with memory.

    ``R1 <= log2 q2 - Hbar(Z2)`` and ``R2 <= log2 q1 - Hbar(Z1)``, floored at 0.

    Raises
    ------
    StructuralViolation
    """
    noise1, noise2 = check_theorem9_hypotheses(spec)
    return rectangle(np.log2(spec.q2) - entropy_rate(noise2),
                     np.log2(spec.q1) - entropy_rate(noise1))


def shannon_type_rectangle(q1: int, q2: int, hbar1: float, hbar2: float) -> RateRegion2D:
    """Non-adaptive achievable rectangle ``R1 <= log2 q2 - hbar2``, ``R2 <= log2 q1 - hbar1``."""
    return rectangle(np.log2(q2) - hbar2, np.log2(q1) - hbar1)


@dataclass(frozen=True)
class IsdMemorySpec:
    """Injective semi-deterministic two-way channel with Markov noise.

    ``Y1 = h1[x1, T1]`` with ``T1 = ht1[x2, Z1]`` and ``Y2 = h2[x2, T2]``
    with ``T2 = ht2[x1, Z2]``.  The noise chains are mutually independent.

    Attributes
    ----------
    h1 : ndarray of int, shape (nx1, nt1)
    ht1 : ndarray of int, shape (nx2, nz1)
    h2 : ndarray of int, shape (nx2, nt2)
    ht2 : ndarray of int, shape (nx1, nz2)
    noise1, noise2 : MarkovNoise

    Raises
    ------
    NotInjective, DimensionMismatch
    """

    h1: np.ndarray
    ht1: np.ndarray
    h2: np.ndarray
    ht2: np.ndarray
    noise1: MarkovNoise
    noise2: MarkovNoise

    def __post_init__(self):
        h1, ht1 = np.asarray(self.h1, int), np.asarray(self.ht1, int)
        h2, ht2 = np.asarray(self.h2, int), np.asarray(self.ht2, int)
        for tab, name in ((h1, "h1"), (ht1, "ht1"), (h2, "h2"), (ht2, "ht2")):
            if tab.ndim != 2:
                raise DimensionMismatch(f"{name} must be a 2-D table")
            _injective_rows(tab, name)
        if ht1.shape[0] != h2.shape[0] or ht2.shape[0] != h1.shape[0]:
            raise DimensionMismatch("intermediate tables do not match the input alphabets")
        if ht1.max() >= h1.shape[1] or ht2.max() >= h2.shape[1]:
            raise DimensionMismatch("intermediate symbol outside the domain of h")
        if ht1.shape[1] != self.noise1.n_states or ht2.shape[1] != self.noise2.n_states:
            raise DimensionMismatch("noise alphabets do not match the intermediate tables")
        for name, val in (("h1", h1), ("ht1", ht1), ("h2", h2), ("ht2", ht2)):
            object.__setattr__(self, name, val)

    def to_memory_spec(self) -> MemoryChannelSpec:
        """The equivalent ``F_j`` tables (``F1[x1, x2, z1] = h1[x1, ht1[x2, z1]]``)."""
        f1 = self.h1[:, self.ht1]                         # [x1, x2, z1]
        f2 = self.h2[:, self.ht2].transpose(1, 0, 2)      # [x1, x2, z2]
        return MemoryChannelSpec(f1, f2, (self.noise1, self.noise2),
                                 q1=self.ht1.shape[0], q2=self.ht2.shape[0])


def _latin(table: np.ndarray, n_symbols: int) -> bool:
    """Square table whose rows and columns are permutations of ``range(n_symbols)``."""
    if table.shape != (n_symbols, n_symbols):
        return False
    full = np.arange(n_symbols)
    return (all(np.array_equal(np.sort(r), full) for r in table)
            and all(np.array_equal(np.sort(c), full) for c in table.T))


def _max_entropy_rate(ht: np.ndarray, nt: int, supplied: float | None, side: str) -> float:
    if supplied is not None:
        if not 0.0 <= supplied <= np.log2(nt) + 1e-12:
            raise OutOfRange(
                f"supplied limit {supplied} for {side} outside [0, log2 {nt}]")
        return float(supplied)
    # cardinality matched: |X_k| = |T_j| = |Z_j|; a Latin intermediate table
    # makes T_j uniform i.i.d. under uniform i.i.d. inputs whatever the noise
    if _latin(ht, nt):
        return float(np.log2(nt))
    raise UnsupportedLimit(
        f"no closed form for the max-entropy rate of {side}; supply it explicitly")


def theorem10_region(spec: IsdMemorySpec, t2_rate: float | None = None,
                     t1_rate: float | None = None) -> RateRegion2D:
    """Capacity rectangle of an ISD two-way channel with memory.

    ``R1 <= lim (1/n) max H(T2^n) - Hbar(Z2)`` and symmetrically for ``R2``.
    The max-entropy limits are taken from the cardinality-matched closed form
    ``log2 |T_j|`` when the intermediate table is a Latin square, and
    otherwise must be supplied by the caller.

    Parameters
    ----------
    spec : IsdMemorySpec
    t2_rate, t1_rate : float, optional
        Caller-supplied values of ``lim (1/n) max H(T_j^n)``.

    Raises
    ------
    UnsupportedLimit
        If a limit is neither supplied nor available in closed form.
    OutOfRange
        If a supplied limit exceeds ``log2 |T_j|``.
    """
    lim2 = _max_entropy_rate(spec.ht2, spec.h2.shape[1], t2_rate, "T2")
    lim1 = _max_entropy_rate(spec.ht1, spec.h1.shape[1], t1_rate, "T1")
    return rectangle(lim2 - entropy_rate(spec.noise2), lim1 - entropy_rate(spec.noise1))


def lemma3_outer(joint: JointMarkovNoise, q1: int, q2: int) -> RateRegion2D:
    """Outer bound for noise-invertible channels with jointly Markov noise.

    ``R1 <= log2 q2 - H(Z2_i | Z_{i-1})`` and
    ``R2 <= log2 q1 - H(Z1_i | Z_{i-1})`` at stationarity, floored at 0.
    One-step conditioning is exact because the pair is jointly Markov.
    """
    return rectangle(np.log2(q2) - joint.conditional_entropy(2),
                     np.log2(q1) - joint.conditional_entropy(1))


# ---------------------------------------------------------------------------
# adaptive coding with dependent noise


def example8_joint_noise() -> JointMarkovNoise:
    """``Z1`` i.i.d. uniform bits and ``Z2_i = Z1_{i-1}``.

    ``T[(a, b) -> (c, d)] = 0.5 [d == a]``.
    """
    t = np.zeros((2, 2, 2, 2))
    for a in range(2):
        t[a, :, :, a] = 0.5
    return JointMarkovNoise.from_transition(t.reshape(4, 4), 2, 2)


@dataclass(frozen=True)
class AdaptiveReport:
    """Outcome of the adaptive binary scheme.

    Attributes
    ----------
    sent, decoded : ndarray of int
        User 1's message bits and user 2's decisions.
    errors : int
        Number of positions where they differ.
    rate : float
        Correctly delivered bits per channel use.
    shannon_type_bound : float
        ``1 - Hbar(Z2)``, the largest ``R1`` non-adaptive coding guarantees.
    outer_bound : tuple of float
        ``(R1, R2)`` corner of the jointly Markov outer bound.
    """

    sent: np.ndarray
    decoded: np.ndarray
    errors: int
    rate: float
    shannon_type_bound: float
    outer_bound: tuple

    def to_dict(self) -> dict:
        return {"n": int(self.sent.size), "errors": self.errors, "rate": self.rate,
                "shannon_type_bound": self.shannon_type_bound,
                "outer_bound": list(self.outer_bound)}


def example8_simulate(n: int, seed: int) -> AdaptiveReport:
    """Simulate the adaptive scheme over the binary channel with lagged noise.

    ``Y_j = X1 xor X2 xor Z_j`` with ``Z1`` i.i.d. uniform and
    ``Z2_i = Z1_{i-1}``, ``Z2_1 = 0``.  User 1 sends
    ``X1_i = M_i xor X1_{i-1} xor Y1_{i-1}`` (all initial values 0), user 2
    sends zeros and decodes ``M_i = Y2_i``.  The noise cancels exactly, so
    every bit is delivered.

    Raises
    ------
    OutOfRange
        If ``n < 1``.
    """
    if n < 1:
        raise OutOfRange(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 2, n)
    z1 = rng.integers(0, 2, n)
    z2 = np.concatenate([[0], z1[:-1]])
    decoded = np.empty(n, dtype=m.dtype)
    x1_prev = y1_prev = 0
    x2 = 0
    for i in range(n):
        x1 = m[i] ^ x1_prev ^ y1_prev
        y1 = x1 ^ x2 ^ z1[i]
        decoded[i] = x1 ^ x2 ^ z2[i]
        x1_prev, y1_prev = x1, y1
    errors = int(np.count_nonzero(decoded != m))
    # Z2 is a lagged copy of Z1, so its entropy rate is that of Z1
    hbar_z2 = entropy_rate(MarkovNoise.iid([0.5, 0.5]))
    outer = lemma3_outer(example8_joint_noise(), 2, 2)
    return AdaptiveReport(sent=m, decoded=decoded, errors=errors,
                          rate=(n - errors) / n,
                          shannon_type_bound=max(1.0 - hbar_z2, 0.0),
                          outer_bound=(outer.r1_max, outer.r2_max))
