"""Discretized square-integrable kernels on the unit cube and their contraction calculus.

A :class:`Kernel` of order ``q`` holds the cell values of a step function on the
uniform grid of ``[0, 1]^q`` with ``n`` cells per axis. All integrals reduce to
finite sums weighted by powers of the cell width ``h = 1/n``.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, ContractionRangeError, DimensionError

MAX_ORDER = 4
MAX_CELLS = 32

__all__ = [
    "Grid",
    "Kernel",
    "ChaosElement",
    "cell",
    "inner_product",
    "norm",
    "contract",
    "nested_contract",
    "symmetrize",
    "adjoint",
    "is_mirror_symmetric",
    "is_fully_symmetric",
    "independence_defect",
    "freeness_defect",
    "random_kernel",
    "load_kernel",
    "save_kernel",
]


@dataclass(frozen=True)
class Grid:
    """Uniform partition of ``[0, 1]`` into ``n`` cells."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DimensionError(f"grid needs a positive cell count, got {self.n!r}")
        if self.n > MAX_CELLS:
            raise CapacityError(f"grid size n={self.n} exceeds the cap {MAX_CELLS}")
        object.__setattr__(self, "n", int(self.n))
        assert abs(self.h * self.n - 1.0) <= 1e-15

    @property
    def h(self) -> float:
        return 1.0 / self.n


@dataclass(frozen=True, eq=False)
class Kernel:
    """Dense real tensor of extent ``n**order`` on a :class:`Grid`.

    Order 0 is the degenerate scalar kernel produced by full contractions.
    The value array is stored read-only, so kernels can be shared freely.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        order = values.ndim
        if order > MAX_ORDER:
            raise CapacityError(f"kernel order {order} exceeds the cap {MAX_ORDER}")
        if values.shape != (self.grid.n,) * order:
            raise DimensionError(
                f"values of shape {values.shape} do not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("kernel values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        return self.values.ndim

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def h(self) -> float:
        return self.grid.h

    # constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, q: int, grid: Grid) -> "Kernel":
        return cls(grid, np.zeros((grid.n,) * q))

    @classmethod
    def constant(cls, q: int, grid: Grid, value: float = 1.0) -> "Kernel":
        return cls(grid, np.full((grid.n,) * q, float(value)))

    @classmethod
    def from_flat(cls, order: int, n: int, values: Iterable[float]) -> "Kernel":
        flat = np.asarray(list(values), dtype=np.float64)
        if flat.size != n**order:
            raise DimensionError(
                f"expected {n}**{order} = {n**order} values, got {flat.size}"
            )
        return cls(Grid(n), flat.reshape((n,) * order))

    # algebra ------------------------------------------------------------

    def _check_same(self, other: "Kernel") -> None:
        if self.grid != other.grid or self.order != other.order:
            raise DimensionError(
                f"kernel mismatch: order {self.order} on n={self.n} "
                f"vs order {other.order} on n={other.n}"
            )

    def __add__(self, other: "Kernel") -> "Kernel":
        self._check_same(other)
        return Kernel(self.grid, self.values + other.values)

    def __sub__(self, other: "Kernel") -> "Kernel":
        self._check_same(other)
        return Kernel(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Kernel":
        return Kernel(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "Kernel":
        return Kernel(self.grid, self.values / float(c))

    def __neg__(self) -> "Kernel":
        return Kernel(self.grid, -self.values)

    def tensor(self, other: "Kernel") -> "Kernel":
        """Tensor product ``(f ⊗ g)(s, t) = f(s) g(t)``."""
        if self.grid != other.grid:
            raise DimensionError("tensor product needs a shared grid")
        return Kernel(self.grid, np.multiply.outer(self.values, other.values))

    def __matmul__(self, other: "Kernel") -> "Kernel":
        return self.tensor(other)

    def equals(self, other: "Kernel") -> bool:
        """Bitwise equality of grid and values."""
        return (
            self.grid == other.grid
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    def scalar(self) -> float:
        if self.order != 0:
            raise DimensionError(f"order-{self.order} kernel is not a scalar")
        return float(self.values)

    # serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "n": self.n,
            "values": [float(v) for v in self.values.ravel(order="C")],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Kernel":
        try:
            order = int(data["order"])
            n = int(data["n"])
            values = data["values"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionError(f"malformed kernel record: {exc}") from exc
        if order < 0:
            raise DimensionError(f"negative kernel order {order}")
        return cls.from_flat(order, n, values)


@dataclass(frozen=True)
class ChaosElement:
    """Finite chaos expansion ``F = sum_q I_q(f_q)`` with one kernel per order."""

    components: Mapping[int, Kernel]

    def __post_init__(self):
        comps = dict(self.components)
        if not comps:
            raise ValueError("a chaos element needs at least one component")
        grids = {k.grid for k in comps.values()}
        if len(grids) != 1:
            raise DimensionError("all chaos components must share one grid")
        for q, k in comps.items():
            if q < 1 or k.order != q:
                raise DimensionError(f"component keyed {q} has order {k.order}")
        object.__setattr__(self, "components", dict(sorted(comps.items())))

    @classmethod
    def of(cls, *kernels: Kernel) -> "ChaosElement":
        comps: dict[int, Kernel] = {}
        for k in kernels:
            comps[k.order] = comps[k.order] + k if k.order in comps else k
        return cls(comps)

    @property
    def grid(self) -> Grid:
        return next(iter(self.components.values())).grid


def cell(j: int, grid: Grid) -> Kernel:
    """Normalized indicator ``e_j`` of grid cell ``j`` (value ``sqrt(n)`` there)."""
    if not 0 <= j < grid.n:
        raise CapacityError(f"cell index {j} outside grid of n={grid.n}")
    v = np.zeros(grid.n)
    v[j] = math.sqrt(grid.n)
    return Kernel(grid, v)


def inner_product(f: Kernel, g: Kernel) -> float:
    """``<f, g> = h^q sum_i f(i) g(i)``."""
    f._check_same(g)
    return float(np.dot(f.values.ravel(), g.values.ravel())) * f.h**f.order


def norm(f: Kernel) -> float:
    return math.sqrt(inner_product(f, f))


def _check_range(f: Kernel, g: Kernel, l: int) -> None:
    if f.grid != g.grid:
        raise DimensionError("contraction needs a shared grid")
    if not 0 <= l <= min(f.order, g.order):
        raise ContractionRangeError(
            f"contraction index l={l} outside 0..min({f.order}, {g.order})"
        )


def contract(f: Kernel, g: Kernel, l: int) -> Kernel:
    """Classical contraction ``f ⊗_l g``.

    The last ``l`` arguments of ``f`` are integrated against the last ``l``
    arguments of ``g`` in the same order; the free arguments of ``f`` come
    first in the result.
    """
    _check_range(f, g, l)
    p, q = f.order, g.order
    axes = (list(range(p - l, p)), list(range(q - l, q)))
    out = np.tensordot(f.values, g.values, axes=axes) * f.h**l
    return Kernel(f.grid, out)


def nested_contract(f: Kernel, g: Kernel, l: int) -> Kernel:
    """Nested contraction: ``g``'s glued arguments ``s_l..s_1`` lead, reversed."""
    _check_range(f, g, l)
    p = f.order
    axes = (list(range(p - l, p)), list(range(l - 1, -1, -1)))
    out = np.tensordot(f.values, g.values, axes=axes) * f.h**l
    return Kernel(f.grid, out)


def is_fully_symmetric(f: Kernel, tol: float = 0.0) -> bool:
    v = f.values
    for perm in itertools.permutations(range(f.order)):
        if np.max(np.abs(v - v.transpose(perm)), initial=0.0) > tol:
            return False
    return True


def symmetrize(f: Kernel) -> Kernel:
    """Average ``f`` over all argument permutations.

    Exactly symmetric inputs are returned unchanged. Otherwise every entry of
    an orbit is copied from the orbit's sorted representative, so the output
    is symmetric bit-for-bit.
    """
    q = f.order
    if q <= 1 or is_fully_symmetric(f):
        return f
    v = f.values
    acc = np.zeros_like(v)
    for perm in itertools.permutations(range(q)):
        acc = acc + v.transpose(perm)
    acc = acc / math.factorial(q)
    idx = np.indices(v.shape).reshape(q, -1)
    rep = np.sort(idx, axis=0)
    out = acc[tuple(rep)].reshape(v.shape)
    return Kernel(f.grid, out)


def adjoint(f: Kernel) -> Kernel:
    """Argument reversal ``f*(t_1..t_q) = f(t_q..t_1)`` (real kernels)."""
    return Kernel(f.grid, f.values.transpose(tuple(range(f.order))[::-1]))


def is_mirror_symmetric(f: Kernel, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    diff = f.values - adjoint(f).values
    return bool(np.max(np.abs(diff), initial=0.0) <= tol)


def _warn_unless_symmetric(f: Kernel, g: Kernel, what: str) -> None:
    for k in (f, g):
        if not (is_mirror_symmetric(k, 1e-12) and is_fully_symmetric(k, 1e-12)):
            warnings.warn(
                f"{what} characterizes (free) independence only for fully "
                "symmetric kernels",
                stacklevel=3,
            )
            return


def independence_defect(f: Kernel, g: Kernel) -> float:
    """``||f ⊗_1 g||``; zero iff the Wiener integrals are independent."""
    _warn_unless_symmetric(f, g, "independence_defect")
    c = contract(f, g, 1)
    return norm(c) if c.order else abs(c.scalar())


def freeness_defect(f: Kernel, g: Kernel) -> float:
    """``||f ⌢_1 g||``; zero iff the Wigner integrals are free."""
    _warn_unless_symmetric(f, g, "freeness_defect")
    c = nested_contract(f, g, 1)
    return norm(c) if c.order else abs(c.scalar())


def random_kernel(
    q: int,
    grid: Grid,
    rng: np.random.Generator,
    symmetry: str | None = None,
) -> Kernel:
    """Standard-normal cell values, optionally made ``"full"``- or ``"mirror"``-symmetric."""
    k = Kernel(grid, rng.standard_normal((grid.n,) * q))
    if symmetry == "full":
        return symmetrize(k)
    if symmetry == "mirror":
        return (k + adjoint(k)) * 0.5
    if symmetry is not None:
        raise ValueError(f"unknown symmetry {symmetry!r}")
    return k


def save_kernel(f: Kernel, path: str | Path, meta: Mapping | None = None) -> None:
    record = f.to_dict()
    if meta is not None:
        record["meta"] = dict(meta)
    Path(path).write_text(json.dumps(record, sort_keys=True) + "\n", encoding="utf-8")


def load_kernel(path: str | Path) -> Kernel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DimensionError(f"{path}: not valid JSON ({exc})") from exc
    return Kernel.from_dict(data)
