"""Contraction of closed tensor networks in which every index joins two tensors.

Both moment oracles reduce each diagram to such a network. Contracting it
pairwise with ``tensordot`` keeps every step on BLAS. Ties in the greedy
ordering break by position, so the arithmetic order is fixed for a given
diagram.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def axis_supports(t: np.ndarray) -> list[np.ndarray]:
    """Per axis, the boolean mask of indices at which ``t`` has a nonzero slice."""
    nz = t != 0
    return [np.any(nz, axis=tuple(a for a in range(t.ndim) if a != ax)) for ax in range(t.ndim)]


def contract_network(
    operands: list[np.ndarray],
    subscripts: list[str],
    supports: Sequence[list[np.ndarray]] | None = None,
) -> float:
    """Sum over all indices of the product of ``operands``.

    ``subscripts[k]`` names the axes of ``operands[k]``; every letter must
    occur in exactly two operands and never twice in one. With ``supports``
    (from :func:`axis_supports`), each index is restricted to the cells where
    both tensors it joins are nonzero; an empty restriction returns ``0.0``.
    """
    tensors = list(operands)
    subs = [list(s) for s in subscripts]
    if supports is not None:
        allowed: dict[str, np.ndarray] = {}
        for s, masks in zip(subs, supports):
            for c, mask in zip(s, masks):
                allowed[c] = allowed[c] & mask if c in allowed else mask
        index = {}
        for c, mask in allowed.items():
            if not mask.any():
                return 0.0
            if not mask.all():
                index[c] = np.flatnonzero(mask)
        if index:
            sliced = []
            for t, s in zip(tensors, subs):
                if any(c in index for c in s):
                    sel = [index.get(c, slice(None)) for c in s]
                    # one axis at a time keeps fancy indexing orthogonal
                    for ax, ix in enumerate(sel):
                        if not isinstance(ix, slice):
                            t = np.take(t, ix, axis=ax)
                sliced.append(t)
            tensors = sliced
    scalar = 1.0
    while True:
        # fold finished scalars
        keep = []
        for t, s in zip(tensors, subs):
            if s:
                keep.append((t, s))
            else:
                scalar *= float(t)
        if not keep:
            return scalar
        tensors = [t for t, _ in keep]
        subs = [s for _, s in keep]
        best = None
        for i in range(len(subs)):
            for j in range(i + 1, len(subs)):
                shared = set(subs[i]) & set(subs[j])
                if not shared:
                    continue
                size = len(subs[i]) + len(subs[j]) - 2 * len(shared)
                key = (size, -len(shared))
                if best is None or key < best[0]:
                    best = (key, i, j, shared)
        if best is None:
            raise ValueError("open indices left in a closed network")
        _, i, j, shared = best
        si, sj = subs[i], subs[j]
        order = [c for c in si if c in shared]
        ax_i = [si.index(c) for c in order]
        ax_j = [sj.index(c) for c in order]
        out = np.tensordot(tensors[i], tensors[j], axes=(ax_i, ax_j))
        out_subs = [c for c in si if c not in shared] + [c for c in sj if c not in shared]
        tensors = [t for k, t in enumerate(tensors) if k not in (i, j)] + [out]
        subs = [s for k, s in enumerate(subs) if k not in (i, j)] + [out_subs]
