"""Exact spectra of the two-degree-of-freedom gyroscopic system.

The system is

    x'' + (2 Omega G + delta D) x' + ((beta^2 - Omega^2) I + kappa K + nu N) x = 0

with G, N skew-symmetric and D, K symmetric.  Everything here is exact
(up to floating point): the characteristic quartic, its roots and the
algebraic stability classification used as ground truth by the
asymptotic modules.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

SYM_TOL = 1e-12

J = np.array([[0.0, 1.0], [-1.0, 0.0]])

UNPERTURBED_LABELS = ("p+", "n+", "p-", "n-")


class InvalidSystem(ValueError):
    """Matrix or parameter violates the structural constraints of the model."""


class NonConvergence(RuntimeError):
    """Root polishing did not reach the residual bound.

    The offending spectrum is attached so callers can still report it.
    """

    def __init__(self, message: str, spectrum: "QuarticSpectrum | None" = None):
        super().__init__(message)
        self.spectrum = spectrum


def _as_matrix(name: str, value) -> np.ndarray:
    m = np.array(value, dtype=float)
    if m.shape != (2, 2):
        raise InvalidSystem(f"{name} must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidSystem(f"{name} has non-finite entries")
    return m


def check_symmetric(name: str, m: np.ndarray, tol: float = SYM_TOL) -> None:
    if abs(m[0, 1] - m[1, 0]) > tol:
        raise InvalidSystem(f"{name} is not symmetric: {name}[0,1]={float(m[0, 1])!r} != {name}[1,0]={float(m[1, 0])!r}")


def check_skew(name: str, m: np.ndarray, tol: float = SYM_TOL) -> None:
    if abs(m[0, 0]) > tol or abs(m[1, 1]) > tol or abs(m[0, 1] + m[1, 0]) > tol:
        raise InvalidSystem(f"{name} is not skew-symmetric")
    if abs(m[0, 1]) <= tol:
        raise InvalidSystem(f"{name} is singular; a skew 2x2 matrix needs a nonzero off-diagonal entry")


@dataclass(frozen=True)
class GyroSystem2D:
    """Coefficient matrices of the gyroscopic system.

    ``G`` and ``N`` may be given with any nonzero skew entry.  They are
    stored normalized to ``[[0, 1], [-1, 0]]`` and the signed scale is kept
    in ``omega_scale`` / ``nu_scale``; :meth:`effective` folds those scales
    into the gyroscopic and circulatory parameters.
    """

    beta: float
    D: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    K: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    G: np.ndarray = field(default_factory=lambda: J.copy())
    N: np.ndarray = field(default_factory=lambda: J.copy())
    omega_scale: float = 1.0
    nu_scale: float = 1.0

    def __post_init__(self):
        beta = float(self.beta)
        if not (math.isfinite(beta) and beta > 0):
            raise InvalidSystem(f"beta must be positive, got {self.beta!r}")
        D = _as_matrix("D", self.D)
        K = _as_matrix("K", self.K)
        G = _as_matrix("G", self.G)
        N = _as_matrix("N", self.N)
        check_symmetric("D", D)
        check_symmetric("K", K)
        check_skew("G", G)
        check_skew("N", N)
        # symmetrize exactly so downstream traces/dets are not polluted by 1e-13 asymmetry
        D = 0.5 * (D + D.T)
        K = 0.5 * (K + K.T)
        g, n = G[0, 1], N[0, 1]
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "G", J.copy())
        object.__setattr__(self, "N", J.copy())
        object.__setattr__(self, "omega_scale", float(self.omega_scale) * g)
        object.__setattr__(self, "nu_scale", float(self.nu_scale) * n)
        for m in (self.D, self.K, self.G, self.N):
            m.flags.writeable = False

    def effective(self, p: "ParamPoint") -> tuple[float, float]:
        """Gyroscopic and circulatory parameters after folding the matrix scales."""
        return p.omega * self.omega_scale, p.nu * self.nu_scale

    @property
    def trD(self) -> float:
        return float(self.D[0, 0] + self.D[1, 1])

    @property
    def detD(self) -> float:
        return float(self.D[0, 0] * self.D[1, 1] - self.D[0, 1] * self.D[1, 0])

    @property
    def trK(self) -> float:
        return float(self.K[0, 0] + self.K[1, 1])

    @property
    def detK(self) -> float:
        return float(self.K[0, 0] * self.K[1, 1] - self.K[0, 1] * self.K[1, 0])

    @property
    def trKD(self) -> float:
        return float(np.trace(self.K @ self.D))

    def damping_eigs(self) -> tuple[float, float]:
        """Eigenvalues of D, larger first."""
        w = np.linalg.eigvalsh(self.D)
        return float(w[1]), float(w[0])

    def stiffness_eigs(self) -> tuple[float, float]:
        """Eigenvalues of K, larger first."""
        w = np.linalg.eigvalsh(self.K)
        return float(w[1]), float(w[0])

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "D": self.D.tolist(),
            "K": self.K.tolist(),
            "omega_scale": self.omega_scale,
            "nu_scale": self.nu_scale,
        }


@dataclass(frozen=True)
class ParamPoint:
    omega: float = 0.0
    delta: float = 0.0
    kappa: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        for name in ("omega", "delta", "kappa", "nu"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidSystem(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)

    def replace(self, **changes) -> "ParamPoint":
        values = {"omega": self.omega, "delta": self.delta, "kappa": self.kappa, "nu": self.nu}
        values.update(changes)
        return ParamPoint(**values)


@dataclass(frozen=True)
class QuarticPoly:
    """Monic quartic ``a4 l^4 + a3 l^3 + a2 l^2 + a1 l + a0`` with ``a4 == 1``."""

    coeffs: tuple[float, float, float, float, float]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if len(c) != 5:
            raise ValueError("a quartic needs exactly five coefficients")
        if c[0] != 1.0:
            raise ValueError(f"quartic must be monic, leading coefficient is {c[0]!r}")
        if not all(math.isfinite(x) for x in c):
            raise ValueError("quartic coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    def __call__(self, lam):
        return np.polyval(self.coeffs, lam)

    def scale(self) -> float:
        return max(1.0, max(abs(x) for x in self.coeffs))


@dataclass(frozen=True)
class QuarticSpectrum:
    roots: tuple[complex, ...]
    residuals: tuple[float, ...]
    labels: tuple[str, ...]

    def relabel(self, labels) -> "QuarticSpectrum":
        return QuarticSpectrum(self.roots, self.residuals, tuple(labels))

    def by_label(self) -> dict[str, complex]:
        return dict(zip(self.labels, self.roots))

    @property
    def max_re(self) -> float:
        return max(r.real for r in self.roots)


class StabilityKind(str, enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    MARGINAL = "Marginal"
    FLUTTER = "Flutter"
    DIVERGENCE = "Divergence"
    # only produced by routh_hurwitz, which cannot tell the unstable kinds apart
    NOT_ASYMPTOTICALLY_STABLE = "NotAsymptoticallyStable"


KIND_CODES = {
    StabilityKind.ASYMPTOTICALLY_STABLE: 0,
    StabilityKind.MARGINAL: 1,
    StabilityKind.FLUTTER: 2,
    StabilityKind.DIVERGENCE: 3,
    StabilityKind.NOT_ASYMPTOTICALLY_STABLE: 4,
}
KIND_FROM_CODE = {v: k for k, v in KIND_CODES.items()}


@dataclass(frozen=True)
class StabilityVerdict:
    kind: StabilityKind
    max_re: float
    tol: float

    @property
    def asymptotically_stable(self) -> bool:
        return self.kind is StabilityKind.ASYMPTOTICALLY_STABLE


# --------------------------------------------------------------------------
# characteristic polynomial


def char_coeffs(beta, omega, delta, kappa, nu, trD, detD, trK, detK, trKD):
    """Coefficients ``(a4, ..., a0)`` of the characteristic quartic.

    All arguments broadcast, so whole parameter grids can be assembled at once.
    ``omega`` and ``nu`` must already be the effective (scale-folded) values.
    """
    w = beta**2 - omega**2
    a3 = delta * trD
    a2 = 2.0 * (beta**2 + omega**2) + delta**2 * detD + kappa * trK
    a1 = 4.0 * omega * nu + delta * w * trD + delta * kappa * (trK * trD - trKD)
    a0 = kappa**2 * detK + kappa * trK * w + w**2 + nu**2
    a3, a2, a1, a0 = np.broadcast_arrays(a3, a2, a1, a0)
    return np.stack([np.ones_like(a0, dtype=float), a3, a2, a1, a0], axis=-1)


def char_poly(sys: GyroSystem2D, p: ParamPoint) -> QuarticPoly:
    omega, nu = sys.effective(p)
    c = char_coeffs(sys.beta, omega, p.delta, p.kappa, nu,
                    sys.trD, sys.detD, sys.trK, sys.detK, sys.trKD)
    return QuarticPoly(tuple(float(x) for x in c))


# --------------------------------------------------------------------------
# root solving

MAX_POLISH_ITER = 50


def _companion_batch(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[0]
    C = np.zeros((n, 4, 4))
    C[:, 0, :] = -coeffs[:, 1:]
    C[:, 1, 0] = C[:, 2, 1] = C[:, 3, 2] = 1.0
    return C


def _even_roots(a2: np.ndarray, a0: np.ndarray) -> np.ndarray:
    """Roots of ``l^4 + a2 l^2 + a0`` via the quadratic in ``z = l^2``.

    Uses the cancellation-free quadratic formula, so double roots at
    ``z`` (spectral-mesh nodes) come out exact.
    """
    disc = (a2 * a2 - 4.0 * a0).astype(complex)
    sq = np.sqrt(disc)
    # pick the sign that avoids cancellation in -a2 -/+ sq
    sgn = np.where((np.conj(sq) * (-a2)).real >= 0, 1.0, -1.0)
    big = 0.5 * (-a2 + sgn * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(big != 0, a0 / big, 0.0)
    r1 = np.sqrt(big + 0j)
    r2 = np.sqrt(small + 0j)
    return np.stack([r1, -r1, r2, -r2], axis=-1)


def _polyval4(coeffs: np.ndarray, lam: np.ndarray):
    """Value and derivative of each quartic (row of ``coeffs``) at each root column."""
    c = coeffs[:, :, None]
    p = np.ones_like(lam) * c[:, 0]
    dp = np.zeros_like(lam)
    for k in range(1, 5):
        dp = dp * lam + p
        p = p * lam + c[:, k]
    return p, dp


def _abs_polyval4(coeffs: np.ndarray, lam: np.ndarray) -> np.ndarray:
    a = np.abs(lam)
    c = np.abs(coeffs)[:, :, None]
    s = np.ones_like(a) * c[:, 0]
    for k in range(1, 5):
        s = s * a + c[:, k]
    return s


def quartic_roots_batch(coeffs, max_iter: int = MAX_POLISH_ITER):
    """Roots of many monic quartics at once.

    Parameters
    ----------
    coeffs : array_like, shape (n, 5)
        Rows ``(1, a3, a2, a1, a0)``.

    Returns
    -------
    roots : complex ndarray, shape (n, 4)
        Sorted by decreasing imaginary part, then increasing real part.
    residuals : float ndarray, shape (n, 4)
        ``|P(root)|``.
    converged : bool ndarray, shape (n,)
        Whether every residual of the row is below ``1e-9 * max(1, max|coeff|)``.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    n = coeffs.shape[0]
    roots = np.empty((n, 4), dtype=complex)
    even = (coeffs[:, 1] == 0.0) & (coeffs[:, 3] == 0.0)
    if np.any(even):
        roots[even] = _even_roots(coeffs[even, 2], coeffs[even, 4])
    if np.any(~even):
        roots[~even] = np.linalg.eigvals(_companion_batch(coeffs[~even]))

    # Newton polishing; a step is kept only if it lowers |P|, which keeps
    # clustered (near-double) roots from being thrown around by noise.
    p, dp = _polyval4(coeffs, roots)
    res = np.abs(p)
    for _ in range(max_iter):
        floor = 4e-16 * _abs_polyval4(coeffs, roots)
        active = (res > floor) & (dp != 0)
        if not np.any(active):
            break
        step = np.zeros_like(roots)
        step[active] = p[active] / dp[active]
        trial = roots - step
        tp, tdp = _polyval4(coeffs, trial)
        better = active & (np.abs(tp) < res)
        if not np.any(better):
            break
        roots = np.where(better, trial, roots)
        p = np.where(better, tp, p)
        dp = np.where(better, tdp, dp)
        res = np.abs(p)

    order = np.lexsort((roots.real, -roots.imag), axis=-1)
    roots = np.take_along_axis(roots, order, axis=-1)
    res = np.take_along_axis(res, order, axis=-1)
    bound = 1e-9 * np.maximum(1.0, np.abs(coeffs).max(axis=1))
    converged = np.all(res < bound[:, None], axis=1)
    return roots, res, converged


def solve_quartic(poly: QuarticPoly, strict: bool = True) -> QuarticSpectrum:
    """Roots of a monic quartic: companion eigenvalues plus Newton polishing.

    Raises :class:`NonConvergence` (carrying the spectrum) when the residual
    bound is missed and ``strict`` is true.
    """
    roots, res, ok = quartic_roots_batch(np.array([poly.coeffs]))
    spec = QuarticSpectrum(
        roots=tuple(complex(r) for r in roots[0]),
        residuals=tuple(float(r) for r in res[0]),
        labels=("r1", "r2", "r3", "r4"),
    )
    if strict and not ok[0]:
        raise NonConvergence(f"root polishing failed, residuals {spec.residuals}", spec)
    return spec


def closed_form_quartic(poly: QuarticPoly) -> list[complex]:
    """Ferrari's closed-form roots; only meant as a cross-check of :func:`solve_quartic`."""
    _, a, b, c, d = poly.coeffs
    # depressed quartic y^4 + p y^2 + q y + r with l = y - a/4
    p = b - 3 * a * a / 8
    q = c - a * b / 2 + a**3 / 8
    r = d - a * c / 4 + a * a * b / 16 - 3 * a**4 / 256
    shift = -a / 4
    if abs(q) < 1e-14:
        z = np.roots([1, p, r])
        ys = [s * np.sqrt(complex(zz)) for zz in z for s in (1, -1)]
        return [complex(y + shift) for y in ys]
    # resolvent cubic m^3 + p m^2 + (p^2/4 - r) m - q^2/8 = 0
    ms = np.roots([1, p, p * p / 4 - r, -q * q / 8])
    m = max(ms, key=abs)
    s = np.sqrt(2 * complex(m))
    out = []
    for sgn in (1, -1):
        disc = -(2 * p + 2 * m + sgn * np.sqrt(2) * q / np.sqrt(complex(m)))
        for t in (1, -1):
            out.append(complex((sgn * s + t * np.sqrt(disc)) / 2 + shift))
    return out


def label_like(spec: QuarticSpectrum, reference: QuarticSpectrum) -> QuarticSpectrum:
    """Give ``spec`` the labels of ``reference`` by cheapest one-to-one matching."""
    from .tracking import best_assignment

    perm = best_assignment(np.array(reference.roots), np.array(spec.roots))
    roots = [spec.roots[j] for j in perm]
    res = [spec.residuals[j] for j in perm]
    return QuarticSpectrum(tuple(roots), tuple(res), reference.labels)


def unperturbed_spectrum(beta: float, omega: float) -> QuarticSpectrum:
    """The four purely imaginary roots of the conservative gyroscopic system."""
    if not beta > 0:
        raise InvalidSystem("beta must be positive")
    roots = (
        complex(0.0, beta + omega),   # p+
        complex(0.0, -beta + omega),  # n+
        complex(0.0, beta - omega),   # p-
        complex(0.0, -beta - omega),  # n-
    )
    return QuarticSpectrum(roots, (0.0, 0.0, 0.0, 0.0), UNPERTURBED_LABELS)


# --------------------------------------------------------------------------
# stability


def classify_roots(roots, tol: float = 1e-8):
    """Vectorised verdict codes for an array of root sets (last axis = roots)."""
    roots = np.asarray(roots)
    re, im = roots.real, roots.imag
    max_re = re.max(axis=-1)
    unstable = re > tol
    flutter = np.any(unstable & (np.abs(im) > tol), axis=-1)
    divergence = np.any(unstable & (np.abs(im) <= tol), axis=-1)
    code = np.full(max_re.shape, KIND_CODES[StabilityKind.ASYMPTOTICALLY_STABLE], dtype=np.int8)
    code[np.abs(max_re) <= tol] = KIND_CODES[StabilityKind.MARGINAL]
    code[divergence] = KIND_CODES[StabilityKind.DIVERGENCE]
    # mixed flutter/divergence counts as flutter
    code[flutter] = KIND_CODES[StabilityKind.FLUTTER]
    return code, max_re


def classify(spec: QuarticSpectrum, tol: float = 1e-8) -> StabilityVerdict:
    if not tol > 0:
        raise ValueError("tol must be positive")
    code, max_re = classify_roots(np.array(spec.roots), tol)
    return StabilityVerdict(KIND_FROM_CODE[int(code)], float(max_re), tol)


def hurwitz_minors(poly: QuarticPoly) -> tuple[float, float, float, float]:
    _, a3, a2, a1, a0 = poly.coeffs
    h1 = a3
    h2 = a3 * a2 - a1
    h3 = a1 * h2 - a3 * a3 * a0
    h4 = a0 * h3
    return h1, h2, h3, h4


def routh_hurwitz(poly: QuarticPoly) -> StabilityVerdict:
    """Asymptotic stability from the Hurwitz determinants alone (no roots)."""
    stable = all(h > 0 for h in hurwitz_minors(poly))
    kind = StabilityKind.ASYMPTOTICALLY_STABLE if stable else StabilityKind.NOT_ASYMPTOTICALLY_STABLE
    return StabilityVerdict(kind, math.nan, math.nan)


def exact_spectrum(sys: GyroSystem2D, p: ParamPoint, strict: bool = False) -> QuarticSpectrum:
    return solve_quartic(char_poly(sys, p), strict=strict)
