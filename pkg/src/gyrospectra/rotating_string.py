"""Rotating circular string with a pointwise spring, damper and friction eyelet.

Non-dimensional boundary eigenvalue problem on ``0 <= phi <= 2 pi``::

    lambda^2 u + 2 Omega lambda u' - (1 - Omega^2) u'' = 0
    u(0) = u(2 pi)
    u'(0) - u'(2 pi) = (lambda d + k) / (1 - Omega^2) u(0) + mu / (1 - Omega^2) u'(0)

The unloaded spectrum is the mesh ``lambda = i n (1 +/- Omega)``.  Its
crossings (nodes) split under the load; :func:`node_split` gives the
first-order splitting and :func:`string_exact_eigs` the exact roots of the
characteristic determinant.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .tracking import continue_branches

SUBCRITICAL_MARGIN = 1e-6
NEWTON_MAX_ITER = 60
MERGE_TOL = 1e-8
RESIDUAL_TOL = 1e-9
DEFAULT_NMAX = 30

TWO_PI = 2.0 * math.pi


class SupercriticalSpeed(ValueError):
    """|Omega| too close to (or beyond) the critical speed 1."""


def _check_omega(omega: float) -> None:
    if not abs(omega) <= 1.0 - SUBCRITICAL_MARGIN:
        raise SupercriticalSpeed(f"|Omega| must be at most 1 - {SUBCRITICAL_MARGIN:g}, got {omega!r}")


@dataclass(frozen=True)
class StringParams:
    omega: float = 0.0
    k: float = 0.0
    d: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        _check_omega(self.omega)
        if self.k < 0 or self.d < 0:
            raise ValueError("spring stiffness k and damping d must be non-negative")

    @property
    def unloaded(self) -> bool:
        return self.k == 0 and self.d == 0 and self.mu == 0


# --------------------------------------------------------------------------
# unloaded mesh


def unperturbed_string_eigs(n_max: int, omega: float) -> list[tuple[tuple[int, int], complex]]:
    """``[((n, sign), i n (1 + sign Omega)), ...]`` for ``0 < |n| <= n_max``.

    Sorted by imaginary part, then by index.
    """
    if abs(omega) >= 1.0:
        raise SupercriticalSpeed("|Omega| must be below 1")
    out = []
    for n in range(-n_max, n_max + 1):
        if n == 0:
            continue
        for sign in (1, -1):
            out.append(((n, sign), complex(0.0, n * (1.0 + sign * omega))))
    out.sort(key=lambda t: (t[1].imag, t[0]))
    return out


def eigenfunction(n: int, sign: int, phi):
    """``cos(n phi) - sign i sin(n phi)``, the mode of the branch ``i n (1 + sign Omega)``."""
    phi = np.asarray(phi, dtype=float)
    return np.cos(n * phi) - sign * 1j * np.sin(n * phi)


@dataclass(frozen=True)
class MeshNode:
    n: int
    eps: int
    m: int
    dl: int
    omega_frac: Fraction = field(repr=False)
    lambda_frac: Fraction = field(repr=False)

    @property
    def omega_star(self) -> float:
        return float(self.omega_frac)

    @property
    def lambda_star(self) -> complex:
        return complex(0.0, float(self.lambda_frac))

    @classmethod
    def from_branches(cls, n: int, eps: int, m: int, dl: int) -> "MeshNode":
        den = m * dl - n * eps
        if den == 0:
            raise ValueError("branches are parallel and never cross")
        return cls(n, eps, m, dl, Fraction(n - m, den), Fraction(n * m * (dl - eps), den))


SUBCRITICAL_RANGE = (-1.0 + SUBCRITICAL_MARGIN, 1.0 - SUBCRITICAL_MARGIN)


def mesh_nodes(n_max: int, omega_range: tuple[float, float] = SUBCRITICAL_RANGE) -> list[MeshNode]:
    """Crossings of the branches ``i n (1 + eps Omega)`` with ``1 <= n <= n_max``.

    Only the upper half-plane is enumerated; the lower half follows by
    conjugation.  Each crossing appears once, with ``(n, eps) < (m, dl)``.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    lo, hi = omega_range
    branches = [(n, e) for n in range(1, n_max + 1) for e in (1, -1)]
    nodes = []
    for i, (n, e) in enumerate(branches):
        for m, dl in branches[i + 1:]:
            if m * dl - n * e == 0:
                continue
            node = MeshNode.from_branches(n, e, m, dl)
            if lo <= node.omega_star <= hi:
                nodes.append(node)
    nodes.sort(key=lambda nd: (nd.omega_frac, nd.lambda_frac, nd.n, nd.eps, nd.m, nd.dl))
    return nodes


# --------------------------------------------------------------------------
# characteristic determinant


def _det_terms(lam, p: StringParams):
    w = 1.0 - p.omega**2
    a = lam / (1.0 - p.omega)
    b = -lam / (1.0 + p.omega)
    ea = np.exp(TWO_PI * a)
    eb = np.exp(TWO_PI * b)
    s = (lam * p.d + p.k) / w
    m = p.mu / w
    t1 = (1.0 - ea) * (1.0 - eb) * (b - a)
    t2 = -(1.0 - ea) * (s + m * b)
    t3 = (1.0 - eb) * (s + m * a)
    return t1, t2, t3, ea, eb, a, b, s, m


def char_det(lam, p: StringParams):
    """Determinant of the 2x2 boundary system for the two-exponential solution.

    Rows are the continuity and slope-jump conditions applied to
    ``u = C1 exp(lambda phi / (1 - Omega)) + C2 exp(-lambda phi / (1 + Omega))``.
    Analytic in ``lambda``; vectorised.
    """
    t1, t2, t3, *_ = _det_terms(lam, p)
    return t1 + t2 + t3


def det_scale(lam, p: StringParams):
    """Magnitude scale of the terms of :func:`char_det` (for relative residuals)."""
    _, _, _, ea, eb, a, b, s, m = _det_terms(lam, p)
    ua, ub = 1.0 + np.abs(ea), 1.0 + np.abs(eb)
    return ua * ub * np.abs(b - a) + ua * (np.abs(s) + abs(m) * np.abs(b)) + ub * (np.abs(s) + abs(m) * np.abs(a))


def det_residual(lam, p: StringParams):
    return np.abs(char_det(lam, p)) / det_scale(lam, p)


def newton_root(lam0: complex, p: StringParams, max_iter: int = NEWTON_MAX_ITER) -> tuple[complex, bool, int]:
    """Complex Newton on :func:`char_det` with a centred finite-difference slope."""
    lam = complex(lam0)
    for it in range(1, max_iter + 1):
        f = char_det(lam, p)
        if f == 0:
            return lam, True, it
        h = 1e-7 * (1.0 + abs(lam))
        df = (char_det(lam + h, p) - char_det(lam - h, p)) / (2.0 * h)
        if df == 0 or not cmath.isfinite(df):
            return lam, False, it
        step = f / df
        lam -= step
        if abs(step) < 1e-12 * (1.0 + abs(lam)):
            return lam, True, it
    return lam, False, max_iter


@dataclass(frozen=True)
class StringSpectrumSlice:
    omega: float
    eigenvalues: tuple[complex, ...]
    labels: tuple[int, ...]
    residuals: tuple[float, ...]
    converged: tuple[bool, ...]
    multiplicity: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return all(self.converged)


def string_exact_eigs(p: StringParams, seeds) -> StringSpectrumSlice:
    """Refine each seed to a root of the characteristic determinant.

    Roots closer than ``1e-8`` are merged (``multiplicity`` counts the
    seeds that landed there).  ``labels`` holds the index of the first seed
    of each root.  Non-convergence is recorded per root, never raised.
    Output is sorted by imaginary part, then real part.
    """
    found: list[list] = []
    for idx, seed in enumerate(seeds):
        root, ok, _ = newton_root(seed, p)
        res = float(det_residual(root, p))
        ok = ok and res < RESIDUAL_TOL
        for entry in found:
            if abs(entry[0] - root) < MERGE_TOL * (1.0 + abs(root)):
                entry[4] += 1
                break
        else:
            found.append([root, idx, res, ok, 1])
    found.sort(key=lambda e: (e[0].imag, e[0].real))
    return StringSpectrumSlice(
        omega=p.omega,
        eigenvalues=tuple(e[0] for e in found),
        labels=tuple(e[1] for e in found),
        residuals=tuple(e[2] for e in found),
        converged=tuple(e[3] for e in found),
        multiplicity=tuple(e[4] for e in found),
    )


def exact_pair(p: StringParams, seeds) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Newton-refine each seed independently (no merging), keeping seed order."""
    roots, res, ok = [], [], []
    for seed in seeds:
        r, conv, _ = newton_root(seed, p)
        rr = float(det_residual(r, p))
        roots.append(r)
        res.append(rr)
        ok.append(conv and rr < RESIDUAL_TOL)
    return np.array(roots), np.array(res), np.array(ok)


# --------------------------------------------------------------------------
# perturbation coefficients at a node


@dataclass(frozen=True)
class NodeCoefficients:
    """Coupling coefficients of the two modes meeting at a node.

    Keys ``"nn"``, ``"nm"``, ``"mn"``, ``"mm"`` follow the branch order of
    the node: ``n`` is the ``(n, eps)`` branch, ``m`` the ``(m, dl)`` one.
    """

    f: dict
    eps: dict


def perturbation_coeffs(node: MeshNode, p: StringParams, d_omega: float) -> NodeCoefficients:
    """Closed-form coupling coefficients of the node."""
    n, e, m, dl = node.n, node.eps, node.m, node.dl
    lam = node.lambda_star
    s = p.d * lam + p.k
    root = math.sqrt(n * m)
    f = {
        "nn": -1j * e * n * d_omega,
        "nm": 0j,
        "mn": 0j,
        "mm": -1j * dl * m * d_omega,
    }
    eps = {
        "nn": (s - e * 1j * n * p.mu) / (4 * math.pi * n * 1j),
        "nm": (s - e * 1j * n * p.mu) / (4 * math.pi * 1j * root),
        "mn": (s - dl * 1j * m * p.mu) / (4 * math.pi * 1j * root),
        "mm": (s - dl * 1j * m * p.mu) / (4 * math.pi * m * 1j),
    }
    return NodeCoefficients(f, eps)


def _mode(n: int, sign: int, phi):
    """Mode and its first two derivatives, written out in cos/sin form."""
    c, s = np.cos(n * phi), np.sin(n * phi)
    u = c - sign * 1j * s
    du = -n * s - sign * 1j * n * c
    ddu = -n * n * c + sign * 1j * n * n * s
    return u, du, ddu


def perturbation_coeffs_quadrature(node: MeshNode, p: StringParams, d_omega: float,
                                   n_points: int = 512) -> NodeCoefficients:
    """Coupling coefficients from the defining integrals over the circle.

    The integrands are trigonometric polynomials, so the periodic trapezoid
    rule with ``n_points > 2 (n + m)`` nodes is exact up to round-off.
    """
    phi = np.arange(n_points) * (TWO_PI / n_points)
    w = TWO_PI / n_points
    lam = node.lambda_star
    om = node.omega_star
    modes = {"n": _mode(node.n, node.eps, phi), "m": _mode(node.m, node.dl, phi)}
    at0 = {"n": _mode(node.n, node.eps, np.array([0.0])), "m": _mode(node.m, node.dl, np.array([0.0]))}

    def integral(x):
        return complex(np.sum(x) * w)

    norm = {k: integral((lam * u + om * du) * np.conj(u)) for k, (u, du, _) in modes.items()}
    f, eps = {}, {}
    for a in "nm":
        for b in "nm":
            ua, dua, ddua = modes[a]
            ub = modes[b][0]
            # both norms lie on the positive imaginary axis; the product sits on the
            # branch cut of sqrt, so take the roots separately
            den = 2.0 * cmath.sqrt(norm[a]) * cmath.sqrt(norm[b])
            num_f = 2 * lam * integral(dua * np.conj(ub)) + 2 * om * integral(ddua * np.conj(ub))
            f[a + b] = num_f / den * d_omega
            u0a, du0a, _ = (complex(x[0]) for x in at0[a])
            u0b = complex(at0[b][0][0])
            num_e = (p.d * lam + p.k) * u0a * np.conj(u0b) + p.mu * du0a * np.conj(u0b)
            eps[a + b] = complex(num_e / den)
    return NodeCoefficients(f, eps)


def node_split(node: MeshNode, p: StringParams, d_omega: float | None = None) -> tuple[complex, complex]:
    """First-order eigenvalue pair near a node.

    ``d_omega`` defaults to ``p.omega - node.omega_star``.
    """
    if d_omega is None:
        d_omega = p.omega - node.omega_star
    n, e, m, dl = node.n, node.eps, node.m, node.dl
    lam = node.lambda_star
    s = p.d * lam + p.k
    centre = (lam + 1j * (e * n + dl * m) / 2 * d_omega
              + 1j * (n + m) / (8 * math.pi * n * m) * s
              + (e + dl) / (8 * math.pi) * p.mu)
    c = ((1j * (e * n - dl * m) / 2 * d_omega
          + 1j * (m - n) / (8 * math.pi * m * n) * s
          + (e - dl) / (8 * math.pi) * p.mu) ** 2
         - (s - 1j * e * n * p.mu) * (s - 1j * dl * m * p.mu) / (16 * math.pi**2 * n * m))
    r = cmath.sqrt(c)
    return centre + r, centre - r


def zero_speed_node(n: int) -> MeshNode:
    """The node ``(Omega, lambda) = (0, i n)`` where branches ``(n, +)`` and ``(n, -)`` meet."""
    return MeshNode.from_branches(n, 1, n, -1)


def track_node_split(node: MeshNode, p: StringParams, omegas) -> np.ndarray:
    """First-order pair along an ``Omega`` sweep, continued branch-wise."""
    rows = [node_split(node, StringParams(float(o), p.k, p.d, p.mu)) for o in omegas]
    return continue_branches(np.array(rows))


# --------------------------------------------------------------------------
# specialisations at the Omega = 0 nodes


def spring_split(n: int, k: float, omega: float) -> tuple[complex, complex]:
    """Spring only: the upper and lower hyperbola branches (lower one passes through ``i n``)."""
    base = n + k / (4 * math.pi * n)
    r = math.sqrt(n * n * omega * omega + k * k / (16 * math.pi**2 * n * n))
    return complex(0.0, base + r), complex(0.0, base - r)


@dataclass(frozen=True)
class DamperBubble:
    eigs: tuple[complex, complex]
    depth: float
    halfwidth: float
    on_ellipse: bool

    def ellipse_residual(self, n: int, omega: float, lam: complex) -> float:
        return (lam.real + self.depth) ** 2 + n * n * omega * omega - self.depth**2

    def hyperbola_residual(self, n: int, omega: float, lam: complex) -> float:
        return n * n * omega * omega - (lam.imag - n) ** 2 - self.depth**2


def damper_bubble(n: int, d: float, omega: float) -> DamperBubble:
    """Damper only: a bubble of complex eigenvalues touching ``Re lambda = 0`` at ``Omega = 0``."""
    depth = d / (4 * math.pi)
    r = cmath.sqrt(depth * depth - n * n * omega * omega)
    centre = complex(-depth, n)
    return DamperBubble(
        eigs=(centre + r, centre - r),
        depth=depth,
        halfwidth=d / (4 * math.pi * n),
        on_ellipse=abs(n * omega) < depth,
    )


@dataclass(frozen=True)
class FrictionSplit:
    eigs: tuple[complex, complex]
    re: tuple[float, float]
    im: tuple[float, float]
    re_small: tuple[float, float]
    im_small: tuple[float, float]
    re_large: tuple[float, float]


def friction_split(n: int, mu: float, omega: float) -> FrictionSplit:
    """Friction only: the pair near ``i n`` and its real/imaginary-part laws.

    ``re``/``im`` come from the separated closed forms and are paired with
    ``eigs`` entry by entry.  ``re_small``/``im_small`` are the square-root
    laws for small ``|Omega|`` and ``re_large`` the large-``Omega`` law
    (``nan`` at ``Omega = 0``).
    """
    # (i n Omega + mu / 4 pi)^2 - mu^2 / 16 pi^2 with the mu^2 terms cancelled exactly
    w = complex(-(n * omega) ** 2, 2 * n * omega * mu / (4 * math.pi))
    r = cmath.sqrt(w)
    eigs = (complex(0.0, n) + r, complex(0.0, n) - r)

    x = abs(n * omega)
    hyp = math.sqrt(4 * math.pi**2 * x * x + mu * mu)
    inner = math.pi * x * hyp
    # inner - 2 pi^2 x^2 rewritten without cancellation
    a = math.sqrt(math.pi * x * mu * mu / (hyp + 2 * math.pi * x)) / (2 * math.pi) if hyp > 0 else 0.0
    b = math.sqrt(2 * math.pi**2 * x * x + inner) / (2 * math.pi)
    if n * omega * mu < 0:
        b = -b
    small = math.sqrt(math.pi * abs(n * mu * omega)) / (2 * math.pi)
    den = 128 * math.pi**3 * n * n * omega * omega
    if den == 0:
        large = (math.nan, math.nan)
    else:
        corr = mu**3 / den
        large = (mu / (4 * math.pi) - corr, -(mu / (4 * math.pi) - corr))
    return FrictionSplit(
        eigs=eigs,
        re=(a, -a),
        im=(n + b, n - b),
        re_small=(small, -small),
        im_small=(n + small, n - small),
        re_large=large,
    )
