"""Multiple Wigner integrals of grid kernels: exact trace moments and a GUE oracle.

The trace of a product of Wigner integrals is a sum over non-crossing
pairings of the concatenated argument slots that never pair two slots of the
same factor; each pairing glues the paired arguments and integrates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iproduct
from string import ascii_letters
from typing import Sequence

import numpy as np

from . import _parallel
from ._network import axis_supports, contract_network
from .errors import CapacityError, DimensionError, SymmetryError, ZeroVarianceError
from .kernel import Kernel, is_mirror_symmetric
from .pairings import (
    Pairing,
    check_degree,
    enumerate_nc_pairings,
    respecting_filter,
    respecting_nc,
)
from .wiener import MomentEstimate, SimulationPlan

__all__ = [
    "Pairing",
    "TraceWord",
    "enumerate_nc_pairings",
    "respecting_filter",
    "trace_moment",
    "word_sum_moment",
    "wigner_variance",
    "free_fourth_moment_gap",
    "semicircle_density",
    "semicircle_moment",
    "catalan",
    "free_sum_fourth_identity",
    "free_sum_second_identity",
    "matrix_oracle_moment",
]


@dataclass(frozen=True)
class TraceWord:
    """Ordered product ``I(f_1) I(f_2) ... I(f_r)`` inside the trace."""

    factors: tuple[Kernel, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if len({k.grid for k in factors}) > 1:
            raise DimensionError("all factors of a word must share one grid")
        if any(k.order < 1 for k in factors):
            raise DimensionError("word factors need order >= 1")
        object.__setattr__(self, "factors", factors)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(k.order for k in self.factors)

    @property
    def degree(self) -> int:
        return sum(self.widths)

    @property
    def blocks(self) -> tuple[range, ...]:
        out, pos = [], 1
        for w in self.widths:
            out.append(range(pos, pos + w))
            pos += w
        return tuple(out)


def _as_word(word: TraceWord | Sequence[Kernel]) -> TraceWord:
    return word if isinstance(word, TraceWord) else TraceWord(tuple(word))


def _supports(k: Kernel) -> list[np.ndarray]:
    cached = k.__dict__.get("_axis_supports")
    if cached is None:
        cached = axis_supports(k.values)
        object.__setattr__(k, "_axis_supports", cached)
    return cached


def trace_moment(word: TraceWord | Sequence[Kernel]) -> float:
    """``phi(I(f_1) ... I(f_r))`` summed over respecting non-crossing pairings."""
    word = _as_word(word)
    q_total = word.degree
    if q_total == 0:
        return 1.0
    if q_total % 2:
        return 0.0
    check_degree(q_total, "trace moment")
    factors = word.factors
    h = factors[0].h
    values = [k.values for k in factors]
    supports = [_supports(k) for k in factors]
    total = 0.0
    for pairing in respecting_nc(word.widths):
        letters = [""] * q_total
        for c, (a, b) in zip(ascii_letters, pairing.pairs):
            letters[a - 1] = letters[b - 1] = c
        subs = ["".join(letters[r.start - 1 : r.stop - 1]) for r in word.blocks]
        total += contract_network(values, subs, supports)
    return total * h ** (q_total // 2)


def word_sum_moment(components: Sequence[Kernel], p: int) -> float:
    """``phi((sum_j I(f_j))^p)`` by expanding into all ``J^p`` words.

    Words equal up to cyclic rotation are evaluated once (the trace is tracial).
    """
    comps = list(components)
    if not comps:
        raise ValueError("need at least one component")
    check_degree(p * max(k.order for k in comps), "word-sum moment")
    seen: dict[tuple[int, ...], float] = {}
    total = 0.0
    for idx in iproduct(range(len(comps)), repeat=p):
        rep = min(idx[i:] + idx[:i] for i in range(p))
        if rep not in seen:
            seen[rep] = trace_moment([comps[i] for i in rep])
        total += seen[rep]
    return total


def wigner_variance(f: Kernel) -> float:
    """``phi(I(f)^2) = <f, f*>``; requires a mirror-symmetric kernel."""
    if not is_mirror_symmetric(f, 1e-12):
        raise SymmetryError("I(f) is self-adjoint only for mirror-symmetric f")
    return trace_moment([f, f])


def free_fourth_moment_gap(f: Kernel) -> float:
    """``phi(F^4) - 2`` for ``F = I(f) / sqrt(phi(I(f)^2))``."""
    var = trace_moment([f, f])
    if not var > 0:
        raise ZeroVarianceError(f"phi(I(f)^2) = {var!r}")
    return trace_moment([f, f, f, f]) / var**2 - 2.0


def semicircle_density(m: float, var: float, x):
    """Density of the semicircular law with mean ``m`` and variance ``var``."""
    if not var > 0:
        raise ValueError("variance must be positive")
    x = np.asarray(x, dtype=np.float64)
    radicand = 4.0 * var - (x - m) ** 2
    out = np.where(radicand > 0, np.sqrt(np.clip(radicand, 0.0, None)), 0.0) / (
        2.0 * math.pi * var
    )
    return float(out) if out.ndim == 0 else out


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def semicircle_moment(k: int, var: float = 1.0) -> float:
    """``k``-th moment of the centered semicircular law: ``Catalan(k/2) var^(k/2)``."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    if k % 2:
        return 0.0
    return catalan(k // 2) * var ** (k // 2)


def free_sum_second_identity(components: Sequence[Kernel]) -> tuple[float, float]:
    """``(phi((sum X_j)^2), sum phi(X_j^2))``; equal for free centered components."""
    lhs = word_sum_moment(components, 2)
    rhs = sum(trace_moment([k, k]) for k in components)
    return lhs, rhs


def free_sum_fourth_identity(components: Sequence[Kernel]) -> tuple[float, float]:
    """``lhs = phi((sum X_j)^4)`` and ``rhs = sum phi(X_j^4) + 4 sum_{i<j} phi(X_i^2) phi(X_j^2)``.

    The two agree when the components are free, e.g. for disjoint supports.
    """
    comps = list(components)
    lhs = word_sum_moment(comps, 4)
    second = [trace_moment([k, k]) for k in comps]
    rhs = sum(trace_moment([k, k, k, k]) for k in comps)
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            rhs += 4.0 * second[i] * second[j]
    return lhs, rhs


# --- random-matrix oracle -------------------------------------------------

MATRIX_BUDGET = 2e12


def _domino_sets(q: int) -> list[tuple[int, ...]]:
    """Sets of disjoint adjacent slot pairs ``(j, j+1)``, given by their left ends."""
    if q < 2:
        return [()]
    out = [s for s in _domino_sets(q - 1)]
    out += [s + (q - 2,) for s in _domino_sets(q - 2)]
    return out


def _trace_adjacent(t: np.ndarray, lefts: tuple[int, ...]) -> np.ndarray:
    for j in sorted(lefts, reverse=True):
        t = np.trace(t, axis1=j, axis2=j + 1)
    return t


def _horner(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_i t(i_1..i_r) X_{i_1} ... X_{i_r}`` as one ``d x d`` matrix."""
    d = x.shape[-1]
    if t.ndim == 0:
        return complex(t) * np.eye(d, dtype=np.complex128)
    acc = np.tensordot(t, x, axes=([t.ndim - 1], [0]))
    if acc.ndim == 2:
        return acc
    while acc.ndim > 3:
        # acc[..., k, :, :] -> sum_k X_k @ acc[..., k, :, :]
        acc = np.matmul(x, acc).sum(axis=-3)
    return np.matmul(x, acc).sum(axis=0)


def _factor_matrix(f: Kernel, x: np.ndarray) -> np.ndarray:
    """Matrix realization of ``I(f)`` from GUE increments ``x`` (shape ``(n, d, d)``).

    Each tuple of increments enters as its free Wick product: adjacent equal
    cells are replaced by ``-h`` in every possible domino pattern.
    """
    q, h = f.order, f.h
    total = None
    for lefts in _domino_sets(q):
        t = _trace_adjacent(f.values, lefts)
        term = (-h) ** len(lefts) * _horner(t, x)
        total = term if total is None else total + term
    return total


def _matrix_work(word: TraceWord, d: int) -> float:
    per_path = 0.0
    for k in {id(k): k for k in word.factors}.values():
        per_path += sum(k.n**j for j in range(1, k.order))
    per_path += len(word.factors)
    return per_path * d**3


def _gue_increments(rng: np.random.Generator, n: int, d: int, h: float) -> np.ndarray:
    scale = math.sqrt(h / (2.0 * d))
    a = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    a = a * scale
    return (a + np.conj(np.swapaxes(a, -1, -2))) / math.sqrt(2.0)


def matrix_oracle_moment(
    word: TraceWord | Sequence[Kernel],
    d: int,
    plan: SimulationPlan,
    budget: float = MATRIX_BUDGET,
) -> MomentEstimate:
    """Estimate ``trace_moment(word)`` by ``(1/d) Tr`` of Hermitian Brownian increments.

    Cell increments are independent ``d x d`` GUE matrices with entry variance
    ``h/d``; they become asymptotically free as ``d`` grows.
    """
    word = _as_word(word)
    if d < 16:
        raise ValueError("matrix oracle needs d >= 16")
    if not word.factors:
        return MomentEstimate(1.0, 0.0, plan.paths, plan.seed)
    work = _matrix_work(word, d) * plan.paths
    if work > budget:
        raise CapacityError(f"matrix oracle work {work:.3g} exceeds budget {budget:.3g}")
    n, h = word.factors[0].n, word.factors[0].h

    def one_path(rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.empty(count)
        for c in range(count):
            x = _gue_increments(rng, n, d, h)
            mats: dict[int, np.ndarray] = {}
            for k in word.factors:
                if id(k) not in mats:
                    mats[id(k)] = _factor_matrix(k, x)
            seq = [mats[id(k)] for k in word.factors]
            if len(seq) == 1:
                tr = np.trace(seq[0])
            else:
                left = seq[0]
                for m in seq[1:-1]:
                    left = left @ m
                tr = np.sum(left * seq[-1].T)
            out[c] = tr.real / d
        return out

    vals = _parallel.simulate_paths(plan.paths, plan.seed, 1, one_path, plan.workers)
    mean, err = _parallel.mean_and_error(vals)
    return MomentEstimate(mean, err, plan.paths, plan.seed)
