"""Multiple Wiener integrals of grid kernels: sampling, exact Wick moments, diagnostics.

The multiple integral of a grid kernel is the Wiener integral of the step
function it represents. On one path with cell increments ``dW`` this is the
kernel summed against the Wick-ordered product of increments: every group of
repeated cells contributes a Hermite polynomial instead of a plain power.
Moments of such integrals are sums over Feynman diagrams whose edges never
join two slots of the same factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iproduct
from string import ascii_letters
from typing import Iterator, Sequence

import numpy as np

from . import _parallel
from ._network import axis_supports, contract_network
from .errors import CapacityError, DimensionError, ZeroVarianceError
from .kernel import ChaosElement, Kernel, symmetrize
from .pairings import all_pairings, block_owner, check_degree

__all__ = [
    "SimulationPlan",
    "MomentEstimate",
    "sample_discrete_integral",
    "exact_moment_wick",
    "exact_moment_chaos",
    "quadrature_moment",
    "variance_exact",
    "fourth_moment_gap",
    "cross_moment_conditions",
    "mc_moment",
    "mc_product_moment",
]

_BLOCK = 4096
_U64 = 2**64


@dataclass(frozen=True)
class SimulationPlan:
    """Path count and seed for a Monte Carlo run; ``workers`` never changes results."""

    paths: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if not 0 <= self.seed < _U64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    std_error: float
    paths: int
    seed: int


def _partial_matchings(q: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All sets of disjoint pairs among slots ``0..q-1``."""

    def rec(free: list[int]):
        if not free:
            yield ()
            return
        first, rest = free[0], free[1:]
        # first slot unpaired
        yield from rec(rest)
        for i, other in enumerate(rest):
            for tail in rec(rest[:i] + rest[i + 1 :]):
                yield ((first, other),) + tail

    yield from rec(list(range(q)))


def sample_discrete_integral(f: Kernel, increments: np.ndarray) -> float | np.ndarray:
    """Evaluate ``I_q(f)`` on one path (shape ``(n,)``) or a batch (shape ``(P, n)``).

    Uses the Wick expansion of the increment product. A set ``pi`` of disjoint
    slot pairs glues each pair onto one cell with weight ``-h``; the unpaired
    slots are integrated against the increments.
    """
    dw = np.asarray(increments, dtype=np.float64)
    single = dw.ndim == 1
    if single:
        dw = dw[None, :]
    if dw.ndim != 2 or dw.shape[1] != f.n:
        raise DimensionError(f"expected {f.n} increments per path, got shape {np.shape(increments)}")
    q = f.order
    total = np.zeros(dw.shape[0])
    for pi in _partial_matchings(q):
        letters = list(ascii_letters[1 : q + 1])
        for a, b in pi:
            letters[b] = letters[a]
        paired = {s for pair in pi for s in pair}
        free = [letters[s] for s in range(q) if s not in paired]
        if free:
            subscripts = "".join(letters) + "".join(",a" + c for c in free) + "->a"
            term = np.einsum(subscripts, f.values, *([dw] * len(free)), optimize=len(free) > 1)
        else:
            term = np.einsum("".join(letters) + "->", f.values)
        total = total + (-f.h) ** len(pi) * term
    return float(total[0]) if single else total


def _expand(factors: Sequence[Kernel], powers: Sequence[int] | None) -> list[Kernel]:
    if powers is None:
        powers = [1] * len(factors)
    if len(powers) != len(factors):
        raise ValueError("one power per factor is required")
    verts: list[Kernel] = []
    for k, p in zip(factors, powers):
        if p < 0:
            raise ValueError("powers must be nonnegative")
        verts.extend([k] * p)
    if verts:
        grids = {k.grid for k in verts}
        if len(grids) != 1:
            raise DimensionError("all factors must share one grid")
        if any(k.order < 1 for k in verts):
            raise DimensionError("integrals need kernels of order >= 1")
    return verts


def _multigraphs(deg: list[int]) -> Iterator[dict[tuple[int, int], int]]:
    """Loopless multigraphs with the given degree sequence, as edge-multiplicity maps."""
    v = len(deg)

    def rec(k: int, rem: list[int], edges: dict):
        if k == v:
            yield dict(edges)
            return
        if rem[k] == 0:
            yield from rec(k + 1, rem, edges)
            return
        targets = list(range(k + 1, v))

        def spread(i: int, left: int):
            if left == 0:
                yield from rec(k + 1, rem, edges)
                return
            if i == len(targets):
                return
            l = targets[i]
            for r in range(min(left, rem[l]), -1, -1):
                if r:
                    edges[(k, l)] = r
                    rem[l] -= r
                yield from spread(i + 1, left - r)
                if r:
                    rem[l] += r
                    del edges[(k, l)]

        saved = rem[k]
        rem[k] = 0
        yield from spread(0, saved)
        rem[k] = saved

    yield from rec(0, list(deg), {})


def _supports(k: Kernel) -> list[np.ndarray]:
    cached = k.__dict__.get("_axis_supports")
    if cached is None:
        cached = axis_supports(k.values)
        object.__setattr__(k, "_axis_supports", cached)
    return cached


def _graph_value(verts: list[Kernel], edges: dict[tuple[int, int], int]) -> float:
    subs: list[list[str]] = [[] for _ in verts]
    pool = iter(ascii_letters)
    for (k, l), r in edges.items():
        for _ in range(r):
            c = next(pool)
            subs[k].append(c)
            subs[l].append(c)
    return contract_network(
        [v.values for v in verts], ["".join(s) for s in subs], [_supports(v) for v in verts]
    )


def _matching_value(verts: list[Kernel], matching: list[tuple[int, int]]) -> float:
    letters = [""] * sum(v.order for v in verts)
    for c, (a, b) in zip(ascii_letters, matching):
        letters[a] = letters[b] = c
    subs, pos = [], 0
    for v in verts:
        subs.append("".join(letters[pos : pos + v.order]))
        pos += v.order
    return contract_network([v.values for v in verts], subs, [_supports(v) for v in verts])


def exact_moment_wick(
    factors: Sequence[Kernel],
    powers: Sequence[int] | None = None,
    method: str = "graphs",
) -> float:
    """Exact ``E[prod_k I_{q_k}(f_k)^{p_k}]`` for grid kernels.

    Sums over complete matchings of the ``D = sum p_k q_k`` argument slots in
    which no pair joins two slots of one factor. Each matching contributes
    ``h^(D/2)`` times the kernel product summed over one shared cell per pair.

    ``method="matchings"`` enumerates the matchings one by one on the raw
    kernels. The default ``"graphs"`` symmetrizes each factor (which leaves the
    integral unchanged) and groups matchings by the multigraph they induce
    between factors, weighting each graph by ``prod q_k! / prod r_kl!``.
    """
    verts = _expand(factors, powers)
    if not verts:
        return 1.0
    degree = sum(v.order for v in verts)
    if degree % 2:
        return 0.0
    check_degree(degree, "Wick moment")
    h = verts[0].h
    scale = h ** (degree // 2)

    if method == "matchings":
        owner = block_owner(tuple(v.order for v in verts))
        total = 0.0
        for m in all_pairings(range(degree)):
            if any(owner[a] == owner[b] for a, b in m):
                continue
            total += _matching_value(verts, m)
        return total * scale
    if method != "graphs":
        raise ValueError(f"unknown method {method!r}")

    sym: dict[int, Kernel] = {}
    verts = [sym.setdefault(id(v), symmetrize(v)) for v in verts]
    base = math.prod(math.factorial(v.order) for v in verts)
    total = 0.0
    for edges in _multigraphs([v.order for v in verts]):
        weight = base // math.prod(math.factorial(r) for r in edges.values())
        total += weight * _graph_value(verts, edges)
    return total * scale


def exact_moment_chaos(F: ChaosElement, p: int) -> float:
    """``E[F^p]`` for a finite chaos expansion, by multinomial expansion."""
    orders = list(F.components)
    kernels = [F.components[q] for q in orders]
    total = 0.0
    for counts in _compositions(p, len(orders)):
        coeff = math.factorial(p) // math.prod(math.factorial(c) for c in counts)
        if sum(c * q for c, q in zip(counts, orders)) % 2:
            continue
        total += coeff * exact_moment_wick(kernels, counts)
    return total


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def quadrature_moment(
    factors: Sequence[Kernel],
    powers: Sequence[int] | None = None,
    nodes: int | None = None,
) -> float:
    """``E[prod I(f_k)^{p_k}]`` by tensor Gauss-Hermite quadrature over the increments.

    Independent of the diagram sums: integrands are evaluated with
    :func:`sample_discrete_integral` at the quadrature nodes. Exact whenever
    ``nodes >= (D + 1) / 2``; limited to ``n <= 4`` increments, ``nodes <= 6``.
    """
    verts = _expand(factors, powers)
    if not verts:
        return 1.0
    n = verts[0].n
    degree = sum(v.order for v in verts)
    if nodes is None:
        nodes = max(1, math.ceil((degree + 1) / 2))
    if n > 4 or nodes > 6:
        raise CapacityError("quadrature oracle limited to n <= 4 and 6 nodes per axis")
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / math.sqrt(2 * math.pi)
    pts = np.array(list(iproduct(x, repeat=n))) * math.sqrt(verts[0].h)
    wts = np.prod(np.array(list(iproduct(w, repeat=n))), axis=1)
    vals = np.ones(len(pts))
    cache: dict[int, np.ndarray] = {}
    for v in verts:
        if id(v) not in cache:
            cache[id(v)] = sample_discrete_integral(v, pts)
        vals = vals * cache[id(v)]
    return float(np.dot(wts, vals))


def variance_exact(f: Kernel) -> float:
    """``E[I_q(f)^2] = q! ||sym f||^2``, evaluated by the Wick oracle."""
    return exact_moment_wick([f], [2])


def fourth_moment_gap(f: Kernel) -> float:
    """``E[F^4] - 3`` for ``F = I_q(f) / sqrt(Var I_q(f))``."""
    var = variance_exact(f)
    if not var > 0:
        raise ZeroVarianceError(f"I_{f.order}(f) has variance {var!r}")
    return exact_moment_wick([f], [4]) / var**2 - 3.0


def cross_moment_conditions(f: Kernel, g: Kernel) -> tuple[float, float, float]:
    """``(E[XY], E[X^3 Y], E[X Y^3])`` for ``X = I(f)``, ``Y = I(g)``."""
    p, q = f.order, g.order
    check_degree(max(3 * p + q, p + 3 * q), "cross-moment check")
    return (
        exact_moment_wick([f, g], [1, 1]),
        exact_moment_wick([f, g], [3, 1]),
        exact_moment_wick([f, g], [1, 3]),
    )


def mc_product_moment(
    factors: Sequence[Kernel],
    powers: Sequence[int] | None,
    plan: SimulationPlan,
) -> MomentEstimate:
    """Monte Carlo estimate of ``E[prod I(f_k)^{p_k}]``."""
    if powers is None:
        powers = [1] * len(factors)
    verts = _expand(factors, powers)
    if not verts:
        raise ValueError("empty product")
    n, h = verts[0].n, verts[0].h
    pairs = list(zip(factors, powers))

    def block(rng: np.random.Generator, count: int) -> np.ndarray:
        dw = rng.standard_normal((count, n)) * math.sqrt(h)
        out = np.ones(count)
        for k, p in pairs:
            if p:
                out = out * sample_discrete_integral(k, dw) ** p
        return out

    vals = _parallel.simulate_paths(plan.paths, plan.seed, _BLOCK, block, plan.workers)
    mean, err = _parallel.mean_and_error(vals)
    return MomentEstimate(mean, err, plan.paths, plan.seed)


def mc_moment(F: ChaosElement | Kernel, p: int, plan: SimulationPlan) -> MomentEstimate:
    """Monte Carlo estimate of ``E[F^p]``, ``1 <= p <= 8``; bitwise fixed by ``(seed, paths)``."""
    if not 1 <= p <= 8:
        raise ValueError(f"moment order p={p} outside 1..8")
    if isinstance(F, Kernel):
        F = ChaosElement.of(F)
    comps = list(F.components.values())
    n, h = F.grid.n, F.grid.h

    def block(rng: np.random.Generator, count: int) -> np.ndarray:
        dw = rng.standard_normal((count, n)) * math.sqrt(h)
        val = np.zeros(count)
        for k in comps:
            val = val + sample_discrete_integral(k, dw)
        return val**p

    vals = _parallel.simulate_paths(plan.paths, plan.seed, _BLOCK, block, plan.workers)
    mean, err = _parallel.mean_and_error(vals)
    return MomentEstimate(mean, err, plan.paths, plan.seed)
