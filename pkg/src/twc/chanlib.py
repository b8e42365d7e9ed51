"""Generators for the two-way channel families and the fixed fixture channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TwoWayChannel, channel_from_marginals, validate_channel, validate_dist
from .errors import NotInjective, ParameterOutOfRange, UnknownFixture


def _check_noise_params(alpha: float, eps: float, name: str) -> None:
    if alpha < 0 or eps < 0 or alpha + eps > 1 + 1e-12:
        raise ParameterOutOfRange(
            f"{name}: need alpha >= 0, eps >= 0 and alpha + eps <= 1, got ({alpha}, {eps})")


def _erasure_output_law(q: int, noise: np.ndarray, erase: float) -> np.ndarray:
    """``P(y | s)`` for ``Y = s (+) Z`` or erasure, indexed ``[s, y]`` with ``y = q`` the erasure."""
    law = np.zeros((q, q + 1))
    for s in range(q):
        for z in range(q):
            law[s, (s + z) % q] += noise[z]
        law[s, q] = erase
    return law


def gen_qary_noise_erasure(q: int, a1: float, e1: float, a2: float, e2: float) -> TwoWayChannel:
    """q-ary additive noise two-way channel with erasures.

    ``Y_j = X1 (+)_q X2 (+)_q Z_j`` unless ``Z_j`` is the erasure symbol, in
    which case ``Y_j = E``.  Noise ``Z_j`` is erased with probability ``e_j``,
    takes each nonzero value with probability ``a_j / (q-1)``, and is zero
    otherwise.  The two noises are independent.  Output alphabets are
    ``{0, ..., q-1, E}`` with ``E`` as the last symbol.

    Raises
    ------
    ParameterOutOfRange
    """
    if int(q) != q or q < 2:
        raise ParameterOutOfRange(f"q must be an integer >= 2, got {q}")
    _check_noise_params(a1, e1, "user 1")
    _check_noise_params(a2, e2, "user 2")
    laws = []
    for a, e in ((a1, e1), (a2, e2)):
        noise = np.full(q, a / (q - 1))
        noise[0] = max(1.0 - a - e, 0.0)
        laws.append(_erasure_output_law(q, noise, e))
    s = (np.arange(q)[:, None] + np.arange(q)[None, :]) % q
    return channel_from_marginals(laws[0][s], laws[1][s])


def gen_binary_additive(z1: float = 0.0, z2: float = 0.0) -> TwoWayChannel:
    """Binary additive-noise channel ``Y_j = X1 (+) X2 (+) Z_j`` with ``Z_j ~ Bern(z_j)``.

    Output alphabets are binary (no erasure symbol).
    """
    laws = []
    for z in (z1, z2):
        if not 0 <= z <= 1:
            raise ParameterOutOfRange(f"noise probability {z} outside [0, 1]")
        laws.append(np.array([[1 - z, z], [z, 1 - z]]))
    s = np.array([[0, 1], [1, 0]])
    return channel_from_marginals(laws[0][s], laws[1][s])


def gen_data_access(m: int, a1: float, e1: float, a2: float, e2: float) -> TwoWayChannel:
    """Data-access channel between two storage devices over ``q = 2**m`` symbols.

    ``Y_j`` equals the bitwise XOR ``X1 ^ X2`` when ``Z_j = 0``, its bitwise
    complement when ``Z_j = 1`` (probability ``a_j``), and the erasure
    ``E`` when ``Z_j = 2`` (probability ``e_j``).  The erasure is the last
    output symbol.
    """
    if int(m) != m or m < 1:
        raise ParameterOutOfRange(f"m must be an integer >= 1, got {m}")
    _check_noise_params(a1, e1, "user 1")
    _check_noise_params(a2, e2, "user 2")
    q = 2 ** m
    xor = np.bitwise_xor.outer(np.arange(q), np.arange(q))
    laws = []
    for a, e in ((a1, e1), (a2, e2)):
        law = np.zeros((q, q, q + 1))
        i1, i2 = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
        law[i1, i2, xor] += max(1.0 - a - e, 0.0)
        law[i1, i2, (q - 1) ^ xor] += a
        law[:, :, q] += e
        laws.append(law)
    return channel_from_marginals(laws[0], laws[1])


@dataclass(frozen=True)
class IsdSpec:
    """Injective semi-deterministic two-way channel.

    ``Y1 = h1[x1, T1]`` with ``T1 = ht1[x2, Z1]`` and ``Y2 = h2[x2, T2]``
    with ``T2 = ht2[x1, Z2]``; the noises are independent.

    Attributes
    ----------
    h1 : ndarray of int, shape (nx1, nt1)
    ht1 : ndarray of int, shape (nx2, nz1)
    h2 : ndarray of int, shape (nx2, nt2)
    ht2 : ndarray of int, shape (nx1, nz2)
    pz1, pz2 : ndarray
        Noise pmfs.
    ny1, ny2 : int, optional
        Output alphabet sizes; default to one more than the largest entry.
    """

    h1: np.ndarray
    ht1: np.ndarray
    h2: np.ndarray
    ht2: np.ndarray
    pz1: np.ndarray
    pz2: np.ndarray
    ny1: int | None = None
    ny2: int | None = None


def _check_injective(table: np.ndarray, name: str) -> None:
    for row, vals in enumerate(table):
        if len(set(vals.tolist())) != len(vals):
            raise NotInjective(name, row)


def gen_isd(spec: IsdSpec) -> TwoWayChannel:
    """Channel law of an injective semi-deterministic two-way channel.

    Raises
    ------
    NotInjective
        If some ``h_j(x_j, .)`` or ``ht_j(x_k, .)`` is not one-to-one.
    """
    h1, ht1 = np.asarray(spec.h1, int), np.asarray(spec.ht1, int)
    h2, ht2 = np.asarray(spec.h2, int), np.asarray(spec.ht2, int)
    for tab, name in ((h1, "h1"), (ht1, "ht1"), (h2, "h2"), (ht2, "ht2")):
        _check_injective(tab, name)
    pz1 = validate_dist(spec.pz1, ht1.shape[1])
    pz2 = validate_dist(spec.pz2, ht2.shape[1])
    nx1, nx2 = h1.shape[0], h2.shape[0]
    if ht1.shape[0] != nx2 or ht2.shape[0] != nx1:
        raise ParameterOutOfRange("intermediate tables do not match the input alphabets")
    if ht1.max() >= h1.shape[1] or ht2.max() >= h2.shape[1]:
        raise ParameterOutOfRange("intermediate symbol outside the domain of h")
    ny1 = spec.ny1 or int(h1.max()) + 1
    ny2 = spec.ny2 or int(h2.max()) + 1
    k1 = np.zeros((nx1, nx2, ny1))
    k2 = np.zeros((nx1, nx2, ny2))
    for x1 in range(nx1):
        for x2 in range(nx2):
            for z, pz in enumerate(pz1):
                k1[x1, x2, h1[x1, ht1[x2, z]]] += pz
            for z, pz in enumerate(pz2):
                k2[x1, x2, h2[x2, ht2[x1, z]]] += pz
    return channel_from_marginals(k1, k2)


# ---------------------------------------------------------------------------
# fixtures

_MOTIVATIONAL = [
    [0.783, 0.087, 0.117, 0.013],
    [0.0417, 0.3753, 0.0583, 0.5247],
    [0.261, 0.609, 0.039, 0.091],
    [0.2919, 0.1251, 0.4081, 0.1749],
]

_EXAMPLE4 = [
    [0.783, 0.087, 0.117, 0.013],
    [0.36279, 0.05421, 0.50721, 0.07579],
    [0.261, 0.609, 0.039, 0.091],
    [0.173889, 0.243111, 0.243111, 0.339889],
]

_EXAMPLE5 = [
    [0.25, 0.5, 0.25, 0.0],
    [0.375, 0.375, 0.125, 0.125],
    [0.125, 0.125, 0.375, 0.375],
    [0.125, 0.125, 0.375, 0.375],
]

_EXAMPLE6_SLICE = np.array([[0.3, 0.2, 0.5], [0.5, 0.3, 0.2], [0.2, 0.5, 0.3]])


def _example6() -> TwoWayChannel:
    # every marginal slice is the same circulant matrix; rows indexed by the
    # ternary input of the slice
    m = _EXAMPLE6_SLICE
    k1 = np.stack([m, m], axis=1)          # [x1, x2, y1]: P(y1|x1,x2) = m[x1, y1]
    k2 = np.stack([m, m], axis=1)          # [x1, x2, y2]: P(y2|x1,x2) = m[x1, y2]
    return channel_from_marginals(k1, k2)


FIXTURES = ("motivational", "example4", "example5", "example6")


def fixture(name: str) -> TwoWayChannel:
    """A fixed channel used throughout the test-suite and the ``repro`` command.

    ``motivational``, ``example4`` and ``example5`` are binary 4x4 joint laws;
    ``example6`` has a ternary user-1 input and ternary outputs, built as the
    product of its (identical circulant) marginal kernels.

    Raises
    ------
    UnknownFixture
    """
    if name == "motivational":
        return validate_channel(_MOTIVATIONAL, 2, 2, 2, 2)
    if name == "example4":
        return validate_channel(_EXAMPLE4, 2, 2, 2, 2)
    if name == "example5":
        return validate_channel(_EXAMPLE5, 2, 2, 2, 2)
    if name == "example6":
        return _example6()
    raise UnknownFixture(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")


def noiseless_echo(n: int = 2) -> TwoWayChannel:
    """Each user sees the other's input exactly: ``Y1 = X2``, ``Y2 = X1``."""
    eye = np.eye(n)
    k1 = np.broadcast_to(eye[None, :, :], (n, n, n))
    k2 = np.broadcast_to(eye[:, None, :], (n, n, n))
    return channel_from_marginals(k1, k2)


def from_state_kernels(to2: list, to1: list) -> TwoWayChannel:
    """Conditionally independent channel from its state-sliced kernels.

    Parameters
    ----------
    to2 : list of ndarray
        ``to2[x2]`` is ``[P(y2 | ., x2)]`` with rows x1.
    to1 : list of ndarray
        ``to1[x1]`` is ``[P(y1 | x1, .)]`` with rows x2.
    """
    k2 = np.asarray(to2, dtype=float).transpose(1, 0, 2)  # -> [x1, x2, y2]
    k1 = np.asarray(to1, dtype=float)                      # [x1, x2, y1]
    return channel_from_marginals(k1, k2)
