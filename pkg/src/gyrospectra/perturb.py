"""First-order splitting of the double eigenvalue ``i*beta`` at ``Omega = 0``.

The node of the spectral mesh at ``(Omega, lambda) = (0, i beta)`` carries a
semi-simple double eigenvalue.  Small damping, stiffness and circulatory
terms, together with a small gyroscopic parameter, split it into the pair

    lambda = i beta + i kappa (rho1 + rho2) / (4 beta) - delta (mu1 + mu2) / 4 +/- sqrt(c)

where ``mu`` and ``rho`` are the eigenvalues of D and K.  The helpers below
give the pieces of that formula and the geometric objects it traces.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import GyroSystem2D, ParamPoint
from .tracking import continue_branches


@dataclass(frozen=True)
class NodeBasis:
    u1: np.ndarray
    u2: np.ndarray
    f: np.ndarray
    eps: np.ndarray


def node_vectors(beta: float) -> tuple[np.ndarray, np.ndarray]:
    s = 1.0 / math.sqrt(2.0 * beta)
    return np.array([0.0, s]), np.array([s, 0.0])


def node_basis(sys: GyroSystem2D, p: ParamPoint) -> NodeBasis:
    """Eigenvectors of ``i beta`` and the coupling coefficients ``f_ij``, ``eps_ij``.

    Index convention: ``f[i-1, j-1] = f_ij``.
    """
    beta = sys.beta
    _, nu = sys.effective(p)
    d, k = sys.D, sys.K
    u1, u2 = node_vectors(beta)
    f = np.array([[0.0, 1j], [-1j, 0.0]])
    hd = 0.5j * p.delta
    hk = p.kappa / (2.0 * beta)
    hn = nu / (2.0 * beta)
    eps = np.array([
        [hd * d[1, 1] + hk * k[1, 1], hd * d[0, 1] + hk * k[0, 1] + hn],
        [hd * d[0, 1] + hk * k[0, 1] - hn, hd * d[0, 0] + hk * k[0, 0]],
    ])
    return NodeBasis(u1, u2, f, eps)


@dataclass(frozen=True)
class SplitC:
    value: complex
    re: float
    im: float
    mu1: float
    mu2: float
    rho1: float
    rho2: float


def split_c(sys: GyroSystem2D, p: ParamPoint) -> SplitC:
    """The radicand ``c`` of the splitting formula, with its real and imaginary parts."""
    beta = sys.beta
    omega, nu = sys.effective(p)
    mu1, mu2 = sys.damping_eigs()
    rho1, rho2 = sys.stiffness_eigs()
    cross = (2.0 * sys.trKD - sys.trK * sys.trD) / (8.0 * beta)
    value = (
        ((mu1 - mu2) / 4.0) ** 2 * p.delta**2
        - ((rho1 - rho2) / (4.0 * beta)) ** 2 * p.kappa**2
        + (1j * omega + nu / (2.0 * beta)) ** 2
        - 1j * p.delta * p.kappa * cross
    )
    re = (
        ((mu1 - mu2) / 4.0) ** 2 * p.delta**2
        - ((rho1 - rho2) / (4.0 * beta)) ** 2 * p.kappa**2
        - omega**2
        + nu**2 / (4.0 * beta**2)
    )
    im = omega * nu / beta - p.delta * p.kappa * cross
    return SplitC(complex(value), float(re), float(im), mu1, mu2, rho1, rho2)


def _centre(sys: GyroSystem2D, p: ParamPoint) -> complex:
    return complex(-sys.trD * p.delta / 4.0, sys.beta + sys.trK * p.kappa / (4.0 * sys.beta))


def asymptotic_eigs(sys: GyroSystem2D, p: ParamPoint) -> tuple[complex, complex]:
    """The two eigenvalues near ``i beta`` to first order (principal square root)."""
    r = cmath.sqrt(split_c(sys, p).value)
    c0 = _centre(sys, p)
    return c0 + r, c0 - r


def asymptotic_eigs_general(basis: NodeBasis, beta: float, omega: float) -> tuple[complex, complex]:
    """Same splitting evaluated from the raw node coefficients ``f_ij``, ``eps_ij``."""
    f, e = basis.f, basis.eps
    shift = 1j * omega * (f[0, 0] + f[1, 1]) / 2 + 1j * (e[0, 0] + e[1, 1]) / 2
    rad = ((omega * (f[0, 0] - f[1, 1]) + e[0, 0] - e[1, 1]) ** 2 / 4
           + (omega * f[0, 1] + e[0, 1]) * (omega * f[1, 0] + e[1, 0]))
    r = 1j * cmath.sqrt(rad)
    return 1j * beta + shift + r, 1j * beta + shift - r


def asymptotic_eigs_grid(sys: GyroSystem2D, omega, delta, kappa, nu) -> np.ndarray:
    """Vectorised :func:`asymptotic_eigs`; returns shape ``broadcast + (2,)``."""
    beta = sys.beta
    omega = np.asarray(omega, dtype=float) * sys.omega_scale
    nu = np.asarray(nu, dtype=float) * sys.nu_scale
    delta = np.asarray(delta, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    mu1, mu2 = sys.damping_eigs()
    rho1, rho2 = sys.stiffness_eigs()
    cross = (2.0 * sys.trKD - sys.trK * sys.trD) / (8.0 * beta)
    c = (((mu1 - mu2) / 4.0) ** 2 * delta**2
         - ((rho1 - rho2) / (4.0 * beta)) ** 2 * kappa**2
         + (1j * omega + nu / (2.0 * beta)) ** 2
         - 1j * delta * kappa * cross)
    r = np.sqrt(c)
    c0 = -sys.trD * delta / 4.0 + 1j * (beta + sys.trK * kappa / (4.0 * beta))
    return np.stack([c0 + r, c0 - r], axis=-1)


def re_im_curves(sys: GyroSystem2D, p: ParamPoint) -> tuple[tuple[float, float], tuple[float, float]]:
    """Real and imaginary parts of the split pair from the separated formulas.

    Entry ``j`` of both returned pairs belongs to the same eigenvalue: the
    signs of the real and imaginary square roots are tied through the sign
    of ``Im c``.
    """
    sc = split_c(sys, p)
    mod = math.hypot(sc.re, sc.im)
    # take the larger root from the formula and the smaller from a*b = Im c / 2,
    # which avoids cancellation in (mod - |Re c|)
    if sc.re >= 0:
        a = math.sqrt((sc.re + mod) / 2.0)
        b = sc.im / (2.0 * a) if a > 0 else 0.0
    else:
        b = math.copysign(math.sqrt((-sc.re + mod) / 2.0), sc.im)
        a = sc.im / (2.0 * b)
    c0 = _centre(sys, p)
    return (c0.real + a, c0.real - a), (c0.imag + b, c0.imag - b)


def quartic_identities(sys: GyroSystem2D, p: ParamPoint, lam: complex) -> tuple[float, float]:
    """Residuals of the two quartic relations satisfied by Re and Im of a split eigenvalue."""
    sc = split_c(sys, p)
    x = lam.real + sys.trD * p.delta / 4.0
    y = lam.imag - sys.beta - sys.trK * p.kappa / (4.0 * sys.beta)
    r1 = 4 * x**4 - 4 * x**2 * sc.re - sc.im**2
    r2 = 4 * y**4 + 4 * y**2 * sc.re - sc.im**2
    return r1, r2


@dataclass(frozen=True)
class Hyperbola:
    asymptote_offsets: tuple[float, float]
    intercepts: tuple[float, float]
    centre: float
    definiteness: str


def conservative_hyperbola(sys: GyroSystem2D, kappa: float, tol: float = 1e-12) -> Hyperbola:
    """Geometry of the purely conservative deformation of the node.

    The imaginary parts lie on a hyperbola in the ``(Omega, Im lambda)``
    plane whose asymptotes are ``centre +/- Omega`` and which crosses
    ``Omega = 0`` at ``beta + kappa rho_i / (2 beta)``.
    """
    beta = sys.beta
    rho1, rho2 = sys.stiffness_eigs()
    centre = beta + (rho1 + rho2) * kappa / (4.0 * beta)
    prod = rho1 * rho2
    if abs(prod) <= tol:
        kind = "semidefinite"
    elif prod > 0:
        kind = "definite"
    else:
        kind = "indefinite"
    return Hyperbola(
        asymptote_offsets=(1.0, -1.0),
        intercepts=(beta + rho1 * kappa / (2.0 * beta), beta + rho2 * kappa / (2.0 * beta)),
        centre=centre,
        definiteness=kind,
    )


@dataclass(frozen=True)
class BubbleGeometry:
    radius: float
    depth: float
    exceptional_omegas: tuple[float, float]
    exceptional_re: float
    omega_cr: float | None
    latent: bool
    degenerate: bool


def dissipative_bubble(sys: GyroSystem2D, delta: float) -> BubbleGeometry:
    """Ring of complex eigenvalues created by damping alone (``kappa = nu = 0``)."""
    mu1, mu2 = sys.damping_eigs()
    det = sys.detD
    half = delta * (mu1 - mu2) / 4.0
    return BubbleGeometry(
        radius=abs(half),
        depth=abs((mu1 + mu2) * delta) / 4.0,
        exceptional_omegas=(abs(half), -abs(half)),
        exceptional_re=-delta * (mu1 + mu2) / 4.0,
        omega_cr=abs(delta) / 2.0 * math.sqrt(-det) if det < 0 else None,
        latent=det >= 0,
        degenerate=mu1 == mu2,
    )


def bubble_residuals(sys: GyroSystem2D, delta: float, omega: float, lam: complex) -> tuple[float, float]:
    """Residuals of the circle (inside the bubble) and hyperbola (outside) relations."""
    mu1, mu2 = sys.damping_eigs()
    r2 = (mu1 - mu2) ** 2 * delta**2 / 16.0
    circle = (lam.real + (mu1 + mu2) * delta / 4.0) ** 2 + omega**2 - r2
    hyper = omega**2 - (lam.imag - sys.beta) ** 2 - r2
    return circle, hyper


def circulatory_split(beta: float, omega: float, nu: float) -> dict[str, complex]:
    """The four eigenvalues under circulatory forces only, keyed by mesh branch."""
    s = nu / (2.0 * beta)
    return {
        "p+": complex(s, beta + omega),
        "n+": complex(-s, -beta + omega),
        "p-": complex(-s, beta - omega),
        "n-": complex(s, -beta - omega),
    }


def complex_trajectory_residual(lam: complex, sys: GyroSystem2D, p: ParamPoint) -> float:
    omega, nu = sys.effective(p)
    return ((lam.real + sys.trD * p.delta / 4.0) * (lam.imag - sys.beta)
            - omega * nu / (2.0 * sys.beta))


def track_asymptotic(sys: GyroSystem2D, base: ParamPoint, omegas) -> np.ndarray:
    """Asymptotic pair along an ``Omega`` sweep with continuous branch labelling.

    Returns shape ``(len(omegas), 2)``.
    """
    omegas = np.asarray(omegas, dtype=float)
    raw = asymptotic_eigs_grid(sys, omegas, base.delta, base.kappa, base.nu)
    return continue_branches(raw)
