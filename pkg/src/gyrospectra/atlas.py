"""Stability boundaries near the node ``(Omega, lambda) = (0, i beta)``.

Closed-form critical values (from the first-order splitting), sampled
sections of the flutter boundary surface in ``(delta, nu, Omega)``, grid
classification with either the exact quartic or the asymptotic pair, and
an exact bisection used to validate the closed forms.  All formulas here
assume ``kappa = 0``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    KIND_CODES,
    KIND_FROM_CODE,
    GyroSystem2D,
    ParamPoint,
    StabilityKind,
    char_coeffs,
    char_poly,
    classify_roots,
    quartic_roots_batch,
    solve_quartic,
)
from .perturb import asymptotic_eigs_grid

DEFAULT_CELL_BUDGET = 10**7
AXES = ("delta", "nu", "omega", "kappa")


class GridTooLarge(ValueError):
    pass


class NoSignChange(ValueError):
    pass


# --------------------------------------------------------------------------
# critical values


@dataclass(frozen=True)
class CriticalOmega:
    """Critical gyroscopic parameter; ``value`` is ``None`` when absent.

    ``status`` is one of ``"ok"``, ``"no_flutter"`` (negative radicand),
    ``"pole"`` (vanishing denominator) or ``"zero_trace"`` (``tr D = 0``
    with ``nu != 0``: the prefactor vanishes and the exact spectrum is
    unstable on both sides of ``Omega = 0``, so no critical value exists).
    """

    value: float | None
    status: str
    source: str


def _fold_ratio(sys: GyroSystem2D, delta: float, nu: float) -> tuple[float, float]:
    beta = sys.beta
    num = nu * nu - delta * delta * beta * beta * sys.detD
    den = nu * nu - delta * delta * beta * beta * (sys.trD / 2.0) ** 2
    return num, den


def indefinite_omega_cr(sys: GyroSystem2D, delta: float) -> float | None:
    """Half-width of the flutter interval for damping alone; present iff det D < 0."""
    if sys.detD >= 0:
        return None
    return abs(delta) / 2.0 * math.sqrt(-sys.detD)


def omega_cr_mixed(sys: GyroSystem2D, delta: float, nu: float) -> CriticalOmega:
    """Critical ``|Omega|`` of the flutter boundary under damping and circulatory forces.

    With ``nu = 0`` and ``tr D = 0`` the mixed formula is indeterminate and
    the damping-only result is returned instead.
    """
    if delta == 0:
        raise ValueError("delta must be nonzero")
    nu = nu * sys.nu_scale
    if nu == 0 and sys.trD == 0:
        v = indefinite_omega_cr(sys, delta)
        return CriticalOmega(v, "ok" if v is not None else "no_flutter", "damping")
    if sys.trD == 0:
        # the prefactor vanishes: the instability is not confined to a wedge
        return CriticalOmega(None, "zero_trace", "mixed")
    num, den = _fold_ratio(sys, delta, nu)
    if den == 0:
        return CriticalOmega(None, "pole", "mixed")
    radicand = -num / den
    if radicand < 0:
        return CriticalOmega(None, "no_flutter", "mixed")
    return CriticalOmega(abs(delta * sys.trD / 4.0) * math.sqrt(radicand), "ok", "mixed")


def freq_band(sys: GyroSystem2D, delta: float, nu: float) -> tuple[float, float] | None:
    """Frequency interval ``(omega_minus, omega_plus)`` of the unstable modes, or ``None``."""
    nu = nu * sys.nu_scale
    beta = sys.beta
    if nu == 0:
        return (beta, beta)
    num, den = _fold_ratio(sys, delta, nu)
    if den == 0:
        return None
    radicand = -num / den
    if radicand < 0:
        return None
    half = abs(nu) / (2.0 * beta) * math.sqrt(radicand)
    return (beta - half, beta + half)


def max_re_at_zero(sys: GyroSystem2D, delta: float, nu: float) -> float:
    """Largest real part of the split pair at ``Omega = 0``."""
    mu1, mu2 = sys.damping_eigs()
    nu = nu * sys.nu_scale
    return (-(mu1 + mu2) / 4.0 * delta
            + math.sqrt(((mu1 - mu2) / 4.0) ** 2 * delta**2 + nu**2 / (4.0 * sys.beta**2)))


@dataclass(frozen=True)
class CriticalSet:
    omega_cr: float | None
    freq_band: tuple[float, float] | None
    max_re_at_zero: float
    status: str


def critical_set(sys: GyroSystem2D, delta: float, nu: float) -> CriticalSet:
    oc = omega_cr_mixed(sys, delta, nu)
    return CriticalSet(oc.value, freq_band(sys, delta, nu), max_re_at_zero(sys, delta, nu), oc.status)


# --------------------------------------------------------------------------
# boundary sections


def _section_ratio(detD: float, trD: float, delta, omega):
    """``(delta^2 det D + 4 Omega^2) / (delta^2 tr D^2 + 16 Omega^2)`` without under/overflow.

    Written in terms of ``t = Omega / delta`` (or its inverse) so that the
    value at tiny scales is not lost to underflow of the squares.
    """
    delta = np.asarray(delta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    big_d = np.abs(delta) >= np.abs(omega)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = np.where(big_d, omega / np.where(delta == 0, 1.0, delta), 0.0)
        u = np.where(big_d, 0.0, delta / np.where(omega == 0, 1.0, omega))
        num = np.where(big_d, detD + 4 * t * t, detD * u * u + 4)
        den = np.where(big_d, trD * trD + 16 * t * t, trD * trD * u * u + 16)
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    # round-off at the tip of a closed loop
    return np.where((ratio < 0) & (ratio > -1e-14), 0.0, ratio)


def boundary_nu(sys: GyroSystem2D, delta: float, omega: float) -> tuple[float, ...]:
    """Values of ``nu`` on the flutter boundary for given ``delta`` and ``Omega``.

    Empty when the radicand is negative, a single ``0.0`` when both signs
    coincide, otherwise the pair ``(-|nu|, +|nu|)``.
    """
    omega = omega * sys.omega_scale
    if delta == 0:
        return (0.0,)
    ratio = float(_section_ratio(sys.detD, sys.trD, delta, omega))
    if not ratio >= 0:
        return ()
    v = abs(delta * sys.beta * sys.trD) * math.sqrt(ratio) / abs(sys.nu_scale)
    if v == 0:
        return (0.0,)
    return (-v, v)


def _boundary_nu_signed(sys: GyroSystem2D, delta: np.ndarray, omega: float) -> np.ndarray:
    ratio = _section_ratio(sys.detD, sys.trD, delta, omega * sys.omega_scale)
    with np.errstate(invalid="ignore"):
        out = delta * sys.beta * sys.trD * np.sqrt(np.where(ratio >= 0, ratio, np.nan))
    out = np.where(delta == 0, 0.0, out)
    return out / sys.nu_scale


@dataclass(frozen=True)
class BoundarySection:
    """One ``Omega = const`` cross-section of the flutter boundary surface.

    ``curve`` is an ``(M, 2)`` array of ``(delta, nu)`` points: the
    ``+`` branch for increasing ``delta`` followed by the ``-`` branch for
    decreasing ``delta``, so for ``det D < 0`` it traces the closed loop.
    ``branches`` keeps the two halves separately.
    """

    omega: float
    curve: np.ndarray
    branches: tuple[np.ndarray, np.ndarray]
    tangent_slopes: tuple[float, float]
    measured_slopes: tuple[float, float]
    topology: str
    delta_extent: float | None


def section_topology(sys: GyroSystem2D, tol: float = 1e-12) -> str:
    if sys.detD < -tol:
        return "figure-8"
    if sys.detD > tol:
        return "two-crossing-curves"
    return "tangent-pair"


def boundary_section(sys: GyroSystem2D, omega: float, n_samples: int = 401,
                     delta_max: float | None = None) -> BoundarySection:
    """Sample the flutter boundary in the ``(delta, nu)`` plane at fixed ``Omega``.

    For ``det D < 0`` the sampled ``delta`` range is exactly the loop
    extent ``2 |Omega| / sqrt(-det D)``; otherwise ``delta_max`` (default
    ``4 |Omega|``, or 1 when ``Omega = 0``).
    """
    if n_samples < 16:
        raise ValueError("n_samples must be at least 16")
    om = omega * sys.omega_scale
    extent = None
    if sys.detD < 0:
        extent = 2.0 * abs(om) / math.sqrt(-sys.detD)
        if delta_max is None:
            delta_max = extent
    elif delta_max is None:
        delta_max = 4.0 * abs(om) if om != 0 else 1.0
    if n_samples % 2 == 0:
        n_samples += 1  # keep delta = 0 on the grid
    deltas = np.linspace(-delta_max, delta_max, n_samples)
    deltas[n_samples // 2] = 0.0
    upper = _boundary_nu_signed(sys, deltas, omega)
    keep = np.isfinite(upper)
    up = np.column_stack([deltas[keep], upper[keep]])
    lo = np.column_stack([deltas[keep], -upper[keep]])[::-1]
    curve = np.vstack([up, lo])

    slope = sys.beta * sys.trD / 2.0 / sys.nu_scale
    # measured from the samples adjacent to the origin
    i0 = n_samples // 2
    if keep[i0 + 1]:
        m = upper[i0 + 1] / deltas[i0 + 1]
    else:
        m = math.nan
    return BoundarySection(
        omega=omega,
        curve=curve,
        branches=(up, lo[::-1]),
        tangent_slopes=(slope, -slope),
        measured_slopes=(float(m), float(-m)),
        topology=section_topology(sys),
        delta_extent=extent,
    )


def branch_crossings(a: np.ndarray, b: np.ndarray, tol: float = 1e-15) -> list[tuple[float, float]]:
    """Interior points where two sampled branches over the same ``delta`` grid meet.

    Counts sign changes (and exact touches) of ``a - b`` away from the two
    ends; a run of coincident samples counts as overlap and is reported
    point by point.
    """
    x = a[:, 0]
    diff = a[:, 1] - b[:, 1]
    pts = []
    for i in range(1, len(x) - 1):
        if abs(diff[i]) <= tol:
            pts.append((float(x[i]), float(a[i, 1])))
        elif i + 1 < len(x) - 1 and diff[i] * diff[i + 1] < 0:
            t = diff[i] / (diff[i] - diff[i + 1])
            pts.append((float(x[i] + t * (x[i + 1] - x[i])),
                        float(a[i, 1] + t * (a[i + 1, 1] - a[i, 1]))))
    return pts


# --------------------------------------------------------------------------
# grid scans


@dataclass(frozen=True)
class GridSpec:
    """Axes of a scan: ``{name: (lo, hi, n)}`` in row-major order, plus fixed values."""

    axes: tuple[tuple[str, float, float, int], ...]
    fixed: ParamPoint = field(default_factory=ParamPoint)

    def __post_init__(self):
        names = [a[0] for a in self.axes]
        if not 2 <= len(names) <= 3:
            raise ValueError("a scan needs two or three axes")
        for name, lo, hi, n in self.axes:
            if name not in AXES:
                raise ValueError(f"unknown axis {name!r}; choose from {AXES}")
            if n < 2:
                raise ValueError(f"axis {name!r} needs at least 2 points")
        if len(set(names)) != len(names):
            raise ValueError("axes must be distinct")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a[3] for a in self.axes)

    def coords(self) -> dict[str, np.ndarray]:
        return {name: np.linspace(lo, hi, n) for name, lo, hi, n in self.axes}

    def mesh(self) -> dict[str, np.ndarray]:
        c = self.coords()
        grids = np.meshgrid(*[c[a[0]] for a in self.axes], indexing="ij")
        out = {name: np.full(self.shape, getattr(self.fixed, name)) for name in AXES}
        for (name, *_), g in zip(self.axes, grids):
            out[name] = g
        return out


@dataclass(frozen=True)
class StabilityMap:
    grid: GridSpec
    kinds: np.ndarray
    max_re: np.ndarray
    provenance: str

    def kind_at(self, index) -> StabilityKind:
        return KIND_FROM_CODE[int(self.kinds[index])]


def scan_threads() -> int:
    env = os.environ.get("GYROSPECTRA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _oracle_rows(sys: GyroSystem2D, m: dict, tol: float):
    coeffs = char_coeffs(sys.beta, m["omega"] * sys.omega_scale, m["delta"], m["kappa"],
                         m["nu"] * sys.nu_scale, sys.trD, sys.detD, sys.trK, sys.detK, sys.trKD)
    flat = coeffs.reshape(-1, 5)
    roots, _, _ = quartic_roots_batch(flat)
    code, max_re = classify_roots(roots, tol)
    return code.reshape(m["omega"].shape), max_re.reshape(m["omega"].shape)


def _asymptotic_rows(sys: GyroSystem2D, m: dict, tol: float):
    pair = asymptotic_eigs_grid(sys, m["omega"], m["delta"], m["kappa"], m["nu"])
    roots = np.concatenate([pair, np.conj(pair)], axis=-1)
    return classify_roots(roots, tol)


def scan_map(sys: GyroSystem2D, grid: GridSpec, provenance: str = "oracle",
             tol: float = 1e-8, cell_budget: int = DEFAULT_CELL_BUDGET,
             threads: int | None = None) -> StabilityMap:
    """Classify every grid point with the exact quartic or the asymptotic pair.

    Rows along the first axis are evaluated in parallel (up to
    ``GYROSPECTRA_THREADS`` workers); results are assembled in order, so
    the output does not depend on the thread count.
    """
    if provenance not in ("oracle", "asymptotic"):
        raise ValueError("provenance must be 'oracle' or 'asymptotic'")
    cells = int(np.prod(grid.shape))
    if cells > cell_budget:
        raise GridTooLarge(f"{cells} cells exceed the budget of {cell_budget}")
    mesh = grid.mesh()
    fn = _oracle_rows if provenance == "oracle" else _asymptotic_rows
    rows = range(grid.shape[0])
    threads = threads or scan_threads()

    def one(i):
        return fn(sys, {k: v[i] for k, v in mesh.items()}, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(one, rows))
    else:
        parts = [one(i) for i in rows]
    kinds = np.stack([p[0] for p in parts])
    max_re = np.stack([p[1] for p in parts])
    return StabilityMap(grid, kinds, max_re, provenance)


def flutter_contours(smap: StabilityMap) -> list[np.ndarray]:
    """Boundaries of the flutter region of a 2-D map, in axis coordinates.

    Marching squares on the flutter indicator at level 1/2 (cells mixing
    flutter and divergence count as flutter, since the indicator is
    built from the flutter code alone).
    """
    from skimage.measure import find_contours

    if smap.kinds.ndim != 2:
        raise ValueError("contours need a 2-D map")
    mask = (smap.kinds == KIND_CODES[StabilityKind.FLUTTER]).astype(float)
    out = []
    (_, lo0, hi0, n0), (_, lo1, hi1, n1) = smap.grid.axes
    s0 = (hi0 - lo0) / (n0 - 1)
    s1 = (hi1 - lo1) / (n1 - 1)
    for c in find_contours(mask, 0.5):
        out.append(np.column_stack([lo0 + c[:, 0] * s0, lo1 + c[:, 1] * s1]))
    return out


# --------------------------------------------------------------------------
# exact boundary by bisection


def exact_max_re(sys: GyroSystem2D, p: ParamPoint) -> float:
    return solve_quartic(char_poly(sys, p), strict=False).max_re


def find_flutter_boundary(sys: GyroSystem2D, delta: float, nu: float,
                          bracket: tuple[float, float], kappa: float = 0.0,
                          tol: float = 1e-10, max_iter: int = 200) -> float:
    """``Omega`` in ``bracket`` where the largest exact real part crosses zero.

    One end of the bracket must be unstable (max Re > ``tol``) and the
    other not.  Of the two final bracket ends, the one with the smaller
    ``|max Re|`` is returned.
    """
    a, b = map(float, bracket)

    def g(om):
        return exact_max_re(sys, ParamPoint(om, delta, kappa, nu))

    ga, gb = g(a), g(b)
    ua, ub = ga > tol, gb > tol
    if ua == ub:
        raise NoSignChange(f"max Re is {ga:.3e} at {a} and {gb:.3e} at {b}: no stability change")
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        gm = g(mid)
        if abs(gm) < tol and abs(b - a) < 1e-13 * max(1.0, abs(mid)):
            a = b = mid
            ga = gb = gm
            break
        if (gm > tol) == ua:
            a, ga = mid, gm
        else:
            b, gb = mid, gm
    return a if abs(ga) <= abs(gb) else b
