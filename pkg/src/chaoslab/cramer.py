"""Convergence studies for Cramér-type decompositions over constructed kernel families.

Each experiment walks an index ladder ``m``, builds the family kernels on a
shared grid and evaluates second and fourth moments exactly (Wick diagrams on
the Wiener side, respecting non-crossing pairings on the Wigner side). The
report records whether the gap of the sum splits exactly into component gaps
and whether those gaps decay along the ladder.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import (
    CapacityError,
    DimensionError,
    HypothesisViolation,
    NonPositiveValueError,
    SymmetryError,
)
from .kernel import (
    Grid,
    Kernel,
    cell,
    freeness_defect,
    independence_defect,
    is_fully_symmetric,
    is_mirror_symmetric,
    load_kernel,
)
from .kernel import MAX_CELLS
from .wiener import SimulationPlan, cross_moment_conditions, exact_moment_wick
from .wigner import matrix_oracle_moment, trace_moment, word_sum_moment

DEFAULT_INDICES = (1, 2, 4, 8, 16)

WIENER_COLUMNS = ["family", "index", "q", "variance", "gap4", "xm_xy", "xm_x3y", "xm_xy3", "stderr", "seed"]
WIGNER_COLUMNS = ["family", "index", "q", "phi2", "phi4", "free_gap", "oracle_value", "oracle_stderr", "d", "seed"]


# --- families --------------------------------------------------------------


def clt_family(q: int, m: int, block_offset: int, grid: Grid) -> Kernel:
    """``(1/sqrt m) sum_{i<m} e_{offset+i}^{⊗q}``: unit norm, diagonal blocks."""
    if m < 1 or block_offset < 0:
        raise ValueError("need m >= 1 and a nonnegative offset")
    if block_offset + m > grid.n:
        raise CapacityError(
            f"clt family needs cells {block_offset}..{block_offset + m - 1} "
            f"but the grid has n={grid.n}"
        )
    values = np.zeros((grid.n,) * q)
    amp = math.sqrt(grid.n) ** q / math.sqrt(m)
    for j in range(block_offset, block_offset + m):
        values[(j,) * q] = amp
    return Kernel(grid, values)


@dataclass(frozen=True)
class KernelFamily:
    """Sequence ``m -> f_m`` of order-``q`` kernels.

    ``cells(m)`` gives the number of leading grid cells index ``m`` needs;
    ``fixed_n`` pins the grid (file-backed kernels).
    """

    label: str
    q: int
    generator: Callable[[int, Grid], Kernel] = field(repr=False)
    cells: Callable[[int], int] = field(repr=False)
    sigma_sq_limit: float = 1.0
    kind: str = "custom"
    fixed_n: int | None = None

    def kernel(self, m: int, grid: Grid) -> Kernel:
        k = self.generator(m, grid)
        if k.order != self.q or k.grid != grid:
            raise DimensionError(f"family {self.label!r} produced a mismatched kernel")
        return k

    @classmethod
    def clt(cls, label: str, q: int, block_offset: int = 0, block_index: int = 0) -> "KernelFamily":
        """CLT ladder occupying cells ``offset + block_index*m`` onward."""
        return cls(
            label,
            q,
            lambda m, g: clt_family(q, m, block_offset + block_index * m, g),
            lambda m: block_offset + (block_index + 1) * m,
            1.0,
            "clt",
        )

    @classmethod
    def constant(cls, label: str, q: int, block_offset: int = 0) -> "KernelFamily":
        """``e_offset^{⊗q}`` at every index; its fourth-moment gap never decays."""
        return cls(
            label,
            q,
            lambda m, g: clt_family(q, 1, block_offset, g),
            lambda m: block_offset + 1,
            1.0,
            "constant",
        )

    @classmethod
    def zero(cls, label: str, q: int) -> "KernelFamily":
        return cls(label, q, lambda m, g: Kernel.zeros(q, g), lambda m: 1, 0.0, "zero")

    @classmethod
    def from_kernel(cls, label: str, kernel: Kernel) -> "KernelFamily":
        def gen(m: int, g: Grid) -> Kernel:
            return kernel

        sq = float(np.dot(kernel.values.ravel(), kernel.values.ravel())) * kernel.h**kernel.order
        return cls(label, kernel.order, gen, lambda m: kernel.n, sq, "file", kernel.n)


def grid_for(families: Sequence[KernelFamily], m: int) -> Grid:
    """Smallest power-of-two grid holding every family at index ``m``."""
    need = max(f.cells(m) for f in families)
    fixed = {f.fixed_n for f in families if f.fixed_n is not None}
    if len(fixed) > 1:
        raise DimensionError(f"file-backed families disagree on n: {sorted(fixed)}")
    if fixed:
        n = fixed.pop()
        if need > n:
            raise CapacityError(f"index m={m} needs {need} cells, file grid has {n}")
        return Grid(n)
    n = 1
    while n < need:
        n *= 2
    if n > MAX_CELLS:
        raise CapacityError(f"index m={m} needs n={n} cells, cap is {MAX_CELLS}")
    return Grid(n)


# --- tolerances, rates, verdicts --------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    defect: float = 1e-12
    residual: float = 1e-10
    slope: float = -0.5
    final_fraction: float = 0.15
    zero: float = 1e-12

    @classmethod
    def from_mapping(cls, data: Mapping | None) -> "Tolerances":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


def rate_fit(series: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(value)`` against ``log(m)``."""
    if len(series) < 3:
        raise ValueError("rate fit needs at least 3 points")
    ms = np.array([s[0] for s in series], dtype=np.float64)
    vs = np.array([s[1] for s in series], dtype=np.float64)
    if np.any(vs <= 0) or np.any(ms <= 0):
        raise NonPositiveValueError("rate fit needs positive indices and values")
    x, y = np.log(ms), np.log(vs)
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def assess_series(indices: Sequence[int], gaps: Sequence[float], tol: Tolerances) -> dict:
    """Decide whether a gap series converges to zero along the ladder.

    Converged means: identically zero (within ``tol.zero``), or a fitted
    log-log slope at most ``tol.slope`` together with a final gap below
    ``tol.final_fraction`` of the initial gap.
    """
    gaps = [float(g) for g in gaps]
    if all(abs(g) <= tol.zero for g in gaps):
        return {"converged": True, "slope": None, "initial": gaps[0], "final": gaps[-1], "zero": True}
    pts = [(m, g) for m, g in zip(indices, gaps) if g > tol.zero]
    slope = rate_fit(pts) if len(pts) >= 3 else None
    decays = gaps[-1] <= tol.final_fraction * gaps[0]
    converged = slope is not None and slope <= tol.slope and decays
    return {"converged": bool(converged), "slope": slope, "initial": gaps[0], "final": gaps[-1], "zero": False}


@dataclass
class ConvergenceReport:
    """Per-index diagnostics, fitted rates, checks and the overall verdict."""

    mode: str
    labels: list[str]
    rows: list[dict]
    series: dict[str, dict]
    checks: dict[str, bool]
    verdict: bool
    seed: int = 0

    @property
    def fitted_rate(self) -> dict[str, float | None]:
        return {k: v["slope"] for k, v in self.series.items()}

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "labels": self.labels,
            "rows": self.rows,
            "series": self.series,
            "fitted_rate": self.fitted_rate,
            "checks": self.checks,
            "verdict": "pass" if self.verdict else "fail",
            "seed": self.seed,
        }

    def wiener_rows(self) -> list[dict]:
        out = []
        for row in self.rows:
            for comp in row.get("classical", []):
                out.append(
                    {
                        "family": comp["label"],
                        "index": row["index"],
                        "q": comp["q"],
                        "variance": comp["variance"],
                        "gap4": comp["gap"],
                        "xm_xy": comp.get("xm_xy", ""),
                        "xm_x3y": comp.get("xm_x3y", ""),
                        "xm_xy3": comp.get("xm_xy3", ""),
                        "stderr": "",
                        "seed": self.seed,
                    }
                )
        return out

    def wigner_rows(self) -> list[dict]:
        out = []
        for row in self.rows:
            for comp in row.get("free", []):
                out.append(
                    {
                        "family": comp["label"],
                        "index": row["index"],
                        "q": comp["q"],
                        "phi2": comp["variance"],
                        "phi4": comp["fourth"],
                        "free_gap": comp["gap"],
                        "oracle_value": comp.get("oracle_value", ""),
                        "oracle_stderr": comp.get("oracle_stderr", ""),
                        "d": comp.get("oracle_d", ""),
                        "seed": self.seed,
                    }
                )
        return out


def _gap(fourth: float, var: float, target: float, tol: Tolerances) -> float:
    # degenerate (zero) components are reported with gap 0
    if var <= tol.zero:
        return 0.0
    return fourth / var**2 - target


def _check_gate(m: int, quantity: str, value: float, tol: float) -> None:
    if not abs(value) <= tol:
        raise HypothesisViolation(m, quantity, value, tol)


def _sum_label(labels: Sequence[str]) -> str:
    return "+".join(labels)


def _sum_q(qs: Sequence[int]) -> int | str:
    return qs[0] if len(set(qs)) == 1 else "+".join(str(q) for q in qs)


# --- classical ---------------------------------------------------------------


def _classical_sum_moment(f: Kernel, g: Kernel, p: int) -> float:
    return sum(
        math.comb(p, k) * exact_moment_wick([f, g], [k, p - k]) for k in range(p + 1)
    )


def _classical_row(m: int, fx: KernelFamily, fy: KernelFamily, tol: Tolerances) -> dict:
    grid = grid_for([fx, fy], m)
    f, g = fx.kernel(m, grid), fy.kernel(m, grid)
    xy, x3y, xy3 = cross_moment_conditions(f, g)
    _check_gate(m, "E[XY]", xy, tol.defect)
    _check_gate(m, "E[X^3 Y]", x3y, tol.defect)
    _check_gate(m, "E[X Y^3]", xy3, tol.defect)

    vx = exact_moment_wick([f], [2])
    vy = exact_moment_wick([g], [2])
    vz = _classical_sum_moment(f, g, 2)
    x4 = exact_moment_wick([f], [4])
    y4 = exact_moment_wick([g], [4])
    z4 = _classical_sum_moment(f, g, 4)
    x2y2 = exact_moment_wick([f, g], [2, 2])
    rx, ry, rz = x4 - 3 * vx**2, y4 - 3 * vy**2, z4 - 3 * vz**2
    cross_term = 6.0 * (x2y2 - vx * vy)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        defect = independence_defect(f, g)
    comps = [
        {"label": fx.label, "q": fx.q, "variance": vx, "fourth": x4, "raw_gap": rx,
         "gap": _gap(x4, vx, 3.0, tol), "xm_xy": xy, "xm_x3y": x3y, "xm_xy3": xy3},
        {"label": fy.label, "q": fy.q, "variance": vy, "fourth": y4, "raw_gap": ry,
         "gap": _gap(y4, vy, 3.0, tol), "xm_xy": xy, "xm_x3y": xy3, "xm_xy3": x3y},
        {"label": _sum_label([fx.label, fy.label]), "q": _sum_q([fx.q, fy.q]),
         "variance": vz, "fourth": z4, "raw_gap": rz, "gap": _gap(z4, vz, 3.0, tol)},
    ]
    return {
        "index": m,
        "n": grid.n,
        "classical": comps,
        "x2y2": x2y2,
        "cross_term": cross_term,
        "residual": abs(rz - rx - ry - cross_term),
        "additivity_residual": abs(rz - rx - ry),
        "variance_residual": abs(vz - vx - vy),
        "independence_defect": defect,
        "sound": bool(rx <= rz + 1e-10 and ry <= rz + 1e-10),
    }


def _finish(
    mode: str,
    labels: list[str],
    rows: list[dict],
    side: str,
    indices: Sequence[int],
    tol: Tolerances,
    seed: int,
) -> ConvergenceReport:
    ncomp = len(rows[0][side])
    series = {}
    for c in range(ncomp):
        label = rows[0][side][c]["label"]
        series[label] = assess_series(indices, [r[side][c]["gap"] for r in rows], tol)
    parts = [rows[0][side][c]["label"] for c in range(ncomp - 1)]
    total = rows[0][side][-1]["label"]
    residual_ok = all(r["residual"] <= tol.residual for r in rows)
    variance_ok = all(r["variance_residual"] <= tol.residual for r in rows)
    components_conv = all(series[p]["converged"] for p in parts)
    sum_conv = series[total]["converged"]
    checks = {
        "residual": residual_ok,
        "variance": variance_ok,
        "sum_converges": sum_conv,
        "components_converge": components_conv,
        "decomposition": (not sum_conv) or components_conv,
        "soundness": all(r["sound"] for r in rows),
    }
    verdict = residual_ok and variance_ok and sum_conv and components_conv and checks["soundness"]
    return ConvergenceReport(mode, labels, rows, series, checks, bool(verdict), seed)


def run_classical_cramer(
    fam_x: KernelFamily,
    fam_y: KernelFamily,
    indices: Sequence[int] = DEFAULT_INDICES,
    tolerances: Tolerances | None = None,
    seed: int = 0,
) -> ConvergenceReport:
    """Wiener-side study of ``Z = X + Y`` with ``X = I(f_m)``, ``Y = I(g_m)``.

    Raises :class:`HypothesisViolation` if ``E[XY]``, ``E[X^3 Y]`` or
    ``E[X Y^3]`` is nonzero at some index.
    """
    tol = tolerances or Tolerances()
    indices = sorted(indices)
    rows = [_classical_row(m, fam_x, fam_y, tol) for m in indices]
    return _finish("classical", [fam_x.label, fam_y.label], rows, "classical", indices, tol, seed)


# --- free ---------------------------------------------------------------------


def _free_row(
    m: int,
    fams: Sequence[KernelFamily],
    tol: Tolerances,
    oracle: Mapping | None,
    seed: int,
) -> dict:
    grid = grid_for(fams, m)
    ks = [fam.kernel(m, grid) for fam in fams]
    for fam, k in zip(fams, ks):
        if not is_mirror_symmetric(k, 1e-12):
            raise SymmetryError(f"family {fam.label!r} is not mirror-symmetric at m={m}")
    defects = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i in range(len(ks)):
            for j in range(i + 1, len(ks)):
                d = freeness_defect(ks[i], ks[j])
                name = f"||{fams[i].label} nested_1 {fams[j].label}||"
                _check_gate(m, name, d, tol.defect)
                defects[name] = d

    comps = []
    for fam, k in zip(fams, ks):
        v, f4 = trace_moment([k, k]), trace_moment([k, k, k, k])
        comps.append({"label": fam.label, "q": fam.q, "variance": v, "fourth": f4,
                      "raw_gap": f4 - 2 * v**2, "gap": _gap(f4, v, 2.0, tol)})
    vz = word_sum_moment(ks, 2)
    z4 = word_sum_moment(ks, 4)
    vs = [c["variance"] for c in comps]
    rhs4 = sum(c["fourth"] for c in comps) + 4.0 * sum(
        vs[i] * vs[j] for i in range(len(vs)) for j in range(i + 1, len(vs))
    )
    rz = z4 - 2 * vz**2
    raw = [c["raw_gap"] for c in comps]
    comps.append({"label": _sum_label([f.label for f in fams]), "q": _sum_q([f.q for f in fams]),
                  "variance": vz, "fourth": z4, "raw_gap": rz, "gap": _gap(z4, vz, 2.0, tol)})

    if oracle:
        plan = SimulationPlan(int(oracle.get("paths", 8)), seed)
        d = int(oracle.get("d", 64))
        for comp, k in zip(comps, ks):
            est = matrix_oracle_moment([k, k, k, k], d, plan)
            comp.update(oracle_value=est.value, oracle_stderr=est.std_error, oracle_d=d)

    return {
        "index": m,
        "n": grid.n,
        "free": comps,
        "freeness_defects": defects,
        "residual": abs(rz - sum(raw)),
        "lemma_fourth_residual": abs(z4 - rhs4),
        "variance_residual": abs(vz - sum(vs)),
        "sound": all(r <= rz + 1e-10 for r in raw),
    }


def run_free_multi(
    families: Sequence[KernelFamily],
    indices: Sequence[int] = DEFAULT_INDICES,
    tolerances: Tolerances | None = None,
    seed: int = 0,
    oracle: Mapping | None = None,
) -> ConvergenceReport:
    """Wigner-side study of ``sum_j I(f^j_m)`` for ``J <= 3`` free components."""
    fams = list(families)
    if not 1 <= len(fams) <= 3:
        raise CapacityError(f"free multi-component study supports 1..3 families, got {len(fams)}")
    tol = tolerances or Tolerances()
    indices = sorted(indices)
    rows = [_free_row(m, fams, tol, oracle, seed) for m in indices]
    mode = "free" if len(fams) == 2 else "free_multi"
    return _finish(mode, [f.label for f in fams], rows, "free", indices, tol, seed)


def run_free_cramer(
    fam_x: KernelFamily,
    fam_y: KernelFamily,
    indices: Sequence[int] = DEFAULT_INDICES,
    tolerances: Tolerances | None = None,
    seed: int = 0,
    oracle: Mapping | None = None,
) -> ConvergenceReport:
    """Two-component free study; raises :class:`HypothesisViolation` unless free."""
    return run_free_multi([fam_x, fam_y], indices, tolerances, seed, oracle)


# --- transfer -------------------------------------------------------------------


def transfer_check(
    fam: KernelFamily,
    indices: Sequence[int] = DEFAULT_INDICES,
    tolerances: Tolerances | None = None,
    seed: int = 0,
) -> ConvergenceReport:
    """Compare Wiener and Wigner diagnostics of one fully symmetric family.

    Passes when both gap series converge or both fail to, and
    ``E[I^W(f)^2] = q! phi(I^S(f)^2)`` at every index.
    """
    tol = tolerances or Tolerances()
    indices = sorted(indices)
    rows = []
    for m in indices:
        grid = grid_for([fam], m)
        f = fam.kernel(m, grid)
        if not is_fully_symmetric(f, 1e-12):
            raise SymmetryError(f"family {fam.label!r} is not fully symmetric at m={m}")
        wv, w4 = exact_moment_wick([f], [2]), exact_moment_wick([f], [4])
        sv, s4 = trace_moment([f, f]), trace_moment([f, f, f, f])
        scale = math.factorial(fam.q)
        rows.append(
            {
                "index": m,
                "n": grid.n,
                "classical": [{"label": fam.label, "q": fam.q, "variance": wv, "fourth": w4,
                               "raw_gap": w4 - 3 * wv**2, "gap": _gap(w4, wv, 3.0, tol)}],
                "free": [{"label": fam.label, "q": fam.q, "variance": sv, "fourth": s4,
                          "raw_gap": s4 - 2 * sv**2, "gap": _gap(s4, sv, 2.0, tol)}],
                "variance_residual": abs(wv - scale * sv),
            }
        )
    classical = assess_series(indices, [r["classical"][0]["gap"] for r in rows], tol)
    free = assess_series(indices, [r["free"][0]["gap"] for r in rows], tol)
    variance_ok = all(r["variance_residual"] <= tol.residual * max(1.0, abs(r["classical"][0]["variance"])) for r in rows)
    checks = {
        "variance": variance_ok,
        "classical_converges": classical["converged"],
        "free_converges": free["converged"],
        "verdicts_agree": classical["converged"] == free["converged"],
    }
    verdict = variance_ok and checks["verdicts_agree"]
    series = {f"{fam.label}/wiener": classical, f"{fam.label}/wigner": free}
    return ConvergenceReport("transfer", [fam.label], rows, series, checks, bool(verdict), seed)


# --- configuration-driven experiments --------------------------------------------

MODES = ("classical", "free", "free_multi", "transfer")
KINDS = ("clt", "constant", "file", "zero")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


def family_from_entry(entry: Mapping, base_dir: Path | None = None) -> KernelFamily:
    try:
        label = str(entry["label"])
        kind = entry.get("kind", "clt")
        if kind not in KINDS:
            raise ConfigError(f"unknown family kind {kind!r}")
        if kind == "file":
            path = Path(entry["kernel_path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return KernelFamily.from_kernel(label, load_kernel(path))
        q = int(entry["q"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed family entry {dict(entry)!r}: {exc}") from exc
    if not 1 <= q <= 4:
        raise ConfigError(f"family {label!r}: order q={q} outside 1..4")
    offset = int(entry.get("block_offset", 0))
    if kind == "clt":
        return KernelFamily.clt(label, q, offset, int(entry.get("block_index", 0)))
    if kind == "constant":
        return KernelFamily.constant(label, q, offset)
    return KernelFamily.zero(label, q)


def resolve_config(raw: Mapping) -> dict:
    """Fill defaults and validate; the result is what gets recorded in outputs."""
    if not isinstance(raw, Mapping):
        raise ConfigError("experiment config must be a JSON object")
    mode = raw.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    families = raw.get("families")
    if not isinstance(families, list) or not families:
        raise ConfigError("config needs a nonempty 'families' list")
    expected_count = {"classical": (2, 2), "free": (2, 2), "free_multi": (1, 3), "transfer": (1, 1)}[mode]
    if not expected_count[0] <= len(families) <= expected_count[1]:
        raise ConfigError(f"mode {mode!r} takes {expected_count} families, got {len(families)}")
    indices = raw.get("indices", list(DEFAULT_INDICES))
    try:
        indices = sorted(int(i) for i in indices)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad indices: {exc}") from exc
    if len(indices) < 3 or indices[0] < 1:
        raise ConfigError("indices need at least 3 positive entries")
    try:
        tol = Tolerances.from_mapping(raw.get("tolerances"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    seed = int(raw.get("seed", 0))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    expected = raw.get("expected_verdict", "pass")
    if expected not in ("pass", "fail"):
        raise ConfigError("expected_verdict must be 'pass' or 'fail'")
    output = dict(raw.get("output") or {})
    out = {
        "mode": mode,
        "families": [dict(f) for f in families],
        "indices": indices,
        "tolerances": asdict(tol),
        "seed": seed,
        "expected_verdict": expected,
        "output": {
            "csv_path": output.get("csv_path", "report.csv"),
            "json_path": output.get("json_path", "report.json"),
        },
    }
    if raw.get("oracle"):
        out["oracle"] = {"d": int(raw["oracle"].get("d", 64)), "paths": int(raw["oracle"].get("paths", 8))}
    if "description" in raw:
        out["description"] = str(raw["description"])
    return out


def run_experiment(config: Mapping, base_dir: Path | None = None) -> ConvergenceReport:
    """Run a resolved (or raw) experiment config and return its report."""
    cfg = resolve_config(config)
    fams = [family_from_entry(f, base_dir) for f in cfg["families"]]
    tol = Tolerances(**cfg["tolerances"])
    idx, seed, mode = cfg["indices"], cfg["seed"], cfg["mode"]
    if mode == "classical":
        return run_classical_cramer(fams[0], fams[1], idx, tol, seed)
    if mode == "free":
        return run_free_cramer(fams[0], fams[1], idx, tol, seed, cfg.get("oracle"))
    if mode == "free_multi":
        report = run_free_multi(fams, idx, tol, seed, cfg.get("oracle"))
        report.mode = "free_multi"
        return report
    return transfer_check(fams[0], idx, tol, seed)


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (``name`` with or without ``.json``)."""
    here = Path(__file__).parent / "configs"
    stem = name[:-5] if name.endswith(".json") else name
    return here / f"{stem}.json"


def list_bundled_configs() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.json"))


# --- serialization ---------------------------------------------------------------


def _csv_text(rows: list[dict], columns: list[str], header: str) -> str:
    buf = io.StringIO()
    buf.write(header)
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(r.get(k, "")) for k in columns})
    return buf.getvalue()


def _fmt(v: Any) -> Any:
    if isinstance(v, float):
        return repr(v)
    return v


def provenance(config: Mapping) -> dict:
    return {"tool": "chaoslab", "version": __version__, "config": dict(config), "seed": config.get("seed", 0)}


def write_report(report: ConvergenceReport, config: Mapping, json_path: Path, csv_path: Path) -> list[Path]:
    """Write the JSON report and the CSV table(s); returns the files written."""
    doc = provenance(config)
    doc["report"] = report.to_dict()
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    header = (
        f"# chaoslab {__version__} mode={report.mode} seed={report.seed}\n"
        f"# config={json.dumps(dict(config), sort_keys=True, separators=(',', ':'))}\n"
    )
    written = [json_path]
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    if report.mode == "classical":
        csv_path.write_text(_csv_text(report.wiener_rows(), WIENER_COLUMNS, header), encoding="utf-8")
        written.append(csv_path)
    elif report.mode in ("free", "free_multi"):
        csv_path.write_text(_csv_text(report.wigner_rows(), WIGNER_COLUMNS, header), encoding="utf-8")
        written.append(csv_path)
    else:
        free_path = csv_path.with_name(csv_path.stem + ".free" + csv_path.suffix)
        csv_path.write_text(_csv_text(report.wiener_rows(), WIENER_COLUMNS, header), encoding="utf-8")
        free_path.write_text(_csv_text(report.wigner_rows(), WIGNER_COLUMNS, header), encoding="utf-8")
        written += [csv_path, free_path]
    return written
