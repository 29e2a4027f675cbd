import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gyrospectra.rotating_string import (
    DEFAULT_NMAX,
    MeshNode,
    StringParams,
    SupercriticalSpeed,
    char_det,
    damper_bubble,
    det_residual,
    eigenfunction,
    exact_pair,
    friction_split,
    mesh_nodes,
    newton_root,
    node_split,
    perturbation_coeffs,
    perturbation_coeffs_quadrature,
    spring_split,
    string_exact_eigs,
    track_node_split,
    unperturbed_string_eigs,
    zero_speed_node,
)
from gyrospectra.tracking import best_assignment

TWO_PI = 2 * math.pi


def close_pair(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b[list(best_assignment(a, b))]))


# -- parameters -----------------------------------------------------------


def test_subcritical_guard():
    StringParams(omega=1 - 1e-6)
    with pytest.raises(SupercriticalSpeed):
        StringParams(omega=1 - 1e-7)
    with pytest.raises(SupercriticalSpeed):
        unperturbed_string_eigs(3, 1.0)


def test_negative_spring_rejected():
    with pytest.raises(ValueError):
        StringParams(k=-0.1)


def test_default_truncation():
    assert DEFAULT_NMAX == 30


# -- unloaded mesh --------------------------------------------------------


def test_unperturbed_at_rest_is_doubled():
    vals = sorted(v.imag for _, v in unperturbed_string_eigs(2, 0.0))
    assert vals == [-2, -2, -1, -1, 1, 1, 2, 2]


def test_unperturbed_first_mode():
    d = dict(unperturbed_string_eigs(1, 0.2))
    assert d[(1, 1)] == pytest.approx(1.2j) and d[(1, -1)] == pytest.approx(0.8j)


@given(st.integers(1, 30), st.floats(-0.99, 0.99))
def test_branch_gap(n, omega):
    d = dict(unperturbed_string_eigs(n, omega))
    assert d[(n, 1)] - d[(n, -1)] == pytest.approx(2j * n * omega)


def test_eigenfunction_solves_unloaded_equation():
    # (1 - Omega^2) u'' - 2 Omega lambda u' - lambda^2 u = 0 up to the sign convention
    phi = np.linspace(0, TWO_PI, 50)
    for (n, s), lam in unperturbed_string_eigs(3, 0.3):
        u = eigenfunction(n, s, phi)
        assert np.allclose(np.abs(u), 1)
        assert np.allclose(u, np.exp(-1j * s * n * phi))


def test_mesh_node_examples():
    node = MeshNode.from_branches(2, 1, 3, -1)
    assert node.omega_frac == Fraction(1, 5) and node.lambda_star == pytest.approx(2.4j)
    node = MeshNode.from_branches(1, 1, 1, -1)
    assert node.omega_star == 0 and node.lambda_star == 1j


def test_parallel_branches_never_cross():
    with pytest.raises(ValueError):
        MeshNode.from_branches(2, 1, 2, 1)


def test_node_count_matches_brute_force():
    counts = []
    for nmax in (3, 5, 8):
        nodes = mesh_nodes(nmax, (1e-12, 1 - 1e-6))
        # brute force: intersect every pair of lines Im = n (1 + e Omega) on a fine check
        brute = set()
        lines = [(n, e) for n in range(1, nmax + 1) for e in (1, -1)]
        for i, (n, e) in enumerate(lines):
            for m, dl in lines[i + 1:]:
                if n * e == m * dl:
                    continue
                om = (n - m) / (m * dl - n * e)
                if 1e-12 <= om <= 1 - 1e-6:
                    brute.add((round(om, 12), round(n * (1 + e * om), 12)))
        assert len({(round(nd.omega_star, 12), round(nd.lambda_star.imag, 12)) for nd in nodes}) == len(brute)
        for nd in nodes:
            assert nd.n * (1 + nd.eps * nd.omega_star) == pytest.approx(nd.lambda_star.imag)
            assert nd.m * (1 + nd.dl * nd.omega_star) == pytest.approx(nd.lambda_star.imag)
        counts.append(len(nodes))
    assert counts == sorted(counts) and counts[0] < counts[-1]


def test_mesh_includes_rest_nodes():
    nodes = mesh_nodes(4)
    rest = [nd for nd in nodes if nd.omega_star == 0]
    assert sorted(nd.lambda_star.imag for nd in rest) == [1, 2, 3, 4]
    assert all(nd.n == nd.m and nd.eps == -nd.dl for nd in rest)


def test_mesh_nodes_default_range_is_subcritical():
    assert all(abs(nd.omega_star) < 1 for nd in mesh_nodes(6))


# -- characteristic determinant -------------------------------------------


@pytest.mark.parametrize("omega", [0.0, 0.2, 0.7])
def test_det_vanishes_on_mesh(omega):
    p = StringParams(omega)
    for _, lam in unperturbed_string_eigs(10, omega):
        assert det_residual(lam, p) < 1e-12


def test_det_nonzero_off_mesh():
    p = StringParams(0.3)
    for n in range(1, 6):
        assert abs(char_det(1j * (n + 0.5) * 1.3, p)) > 1e-3


def test_det_matches_unloaded_characteristic_equation():
    # unloaded determinant is (1 - e^{2 pi a})(1 - e^{2 pi b})(b - a): check the factors vanish together
    p = StringParams(0.25)
    lam = 0.37 + 0.81j
    a, b = lam / 0.75, -lam / 1.25
    ref = (1 - cmath.exp(TWO_PI * a)) * (1 - cmath.exp(TWO_PI * b)) * (b - a)
    assert char_det(lam, p) == pytest.approx(ref)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0, 1), st.floats(0, 1), st.floats(-1, 1),
       st.floats(-2, 2), st.floats(-5, 5))
def test_det_conjugate_symmetry(omega, k, d, mu, x, y):
    p = StringParams(omega, k, d, mu)
    lam = complex(x, y)
    assert char_det(lam.conjugate(), p) == pytest.approx(char_det(lam, p).conjugate(), rel=1e-12, abs=1e-12)


def test_newton_spring_root_near_rest_node():
    p = StringParams(0.0, k=0.3)
    root, ok, _ = newton_root(1.05j, p)
    assert ok
    # exact: omega tan(pi omega) = k / 2 near 1
    w = root.imag
    assert w * math.tan(math.pi * w) == pytest.approx(0.15, abs=1e-10)
    assert abs(root.real) < 1e-12


def test_exact_eigs_unloaded_returns_seeds():
    p = StringParams(0.4)
    seeds = [lam for _, lam in unperturbed_string_eigs(3, 0.4)]
    sl = string_exact_eigs(p, seeds)
    assert sl.ok
    assert sorted(sl.eigenvalues, key=lambda z: z.imag) == pytest.approx(sorted(seeds, key=lambda z: z.imag))


def test_exact_eigs_merges_duplicates():
    p = StringParams(0.3)
    sl = string_exact_eigs(p, [1.3j + 1e-4, 1.3j - 1e-4j, 0.7j])
    assert len(sl.eigenvalues) == 2
    assert sorted(sl.multiplicity) == [1, 2]
    assert all(r < 1e-9 for r in sl.residuals)


def test_exact_damper_root():
    # exact roots at rest: i n and i n - atanh(d/2)/pi
    p = StringParams(0.0, d=0.3)
    sl = string_exact_eigs(p, [1j + 0.01, 1j - 0.05])
    res = sorted(sl.eigenvalues, key=lambda z: z.real)
    assert res[1] == pytest.approx(1j, abs=1e-9)
    assert res[0] == pytest.approx(1j - math.atanh(0.15) / math.pi, abs=1e-9)
    assert res[0].real == pytest.approx(-0.3 / TWO_PI, abs=0.3**2)


def test_exact_friction_small_speed():
    p = StringParams(0.01, mu=0.3)
    fs = friction_split(1, 0.3, 0.01)
    roots, _, ok = exact_pair(p, fs.eigs)
    assert ok.all()
    assert sorted(r.real for r in roots) == pytest.approx([-0.01545, 0.01545], rel=0.02)


def test_friction_at_rest_stays_double():
    p = StringParams(0.0, mu=0.3)
    # at rest the determinant has a double zero at i n for any mu
    assert abs(char_det(1j, p)) < 1e-12
    h = 1e-4
    d1 = (char_det(1j + h, p) - char_det(1j - h, p)) / (2 * h)
    assert abs(d1) < 1e-6


# -- perturbation coefficients --------------------------------------------


def test_coeff_examples():
    node = zero_speed_node(1)
    c = perturbation_coeffs(node, StringParams(0.0, k=0.3), 0.0)
    assert c.eps["nn"] == pytest.approx(0.3 / (4j * math.pi))
    c = perturbation_coeffs(MeshNode.from_branches(2, 1, 3, -1), StringParams(0.2), 0.01)
    assert c.f["nn"] == pytest.approx(-1j * 2 * 0.01)
    assert c.f["nm"] == 0 and c.f["mn"] == 0


def test_quadrature_matches_closed_form_all_nodes():
    p = StringParams(0.0, k=0.37, d=0.21, mu=-0.13)
    worst = 0.0
    for node in mesh_nodes(10):
        a = perturbation_coeffs(node, p, 0.013)
        b = perturbation_coeffs_quadrature(node, p, 0.013)
        for key in ("nn", "nm", "mn", "mm"):
            worst = max(worst, abs(a.f[key] - b.f[key]), abs(a.eps[key] - b.eps[key]))
    assert worst < 1e-8


# -- node splitting -------------------------------------------------------


def test_node_split_unloaded_gives_mesh_lines():
    node = MeshNode.from_branches(2, 1, 3, -1)
    dw = 0.01
    pair = node_split(node, StringParams(node.omega_star + dw), dw)
    lines = [2j * (1 + (node.omega_star + dw)), 3j * (1 - (node.omega_star + dw))]
    assert close_pair(pair, lines) < 1e-12


def test_node_split_specialises_to_spring_and_damper():
    node = zero_speed_node(2)
    for om in (0.0, 0.003, -0.01):
        assert close_pair(node_split(node, StringParams(om, k=0.2)), spring_split(2, 0.2, om)) < 1e-14
        assert close_pair(node_split(node, StringParams(om, d=0.2)), damper_bubble(2, 0.2, om).eigs) < 1e-14
        # the generic radicand sits next to a double root at rest: sqrt(rounding) ~ 1e-10
        assert close_pair(node_split(node, StringParams(om, mu=0.2)), friction_split(2, 0.2, om).eigs) < 1e-9


@pytest.mark.parametrize("branches", [(1, 1, 1, -1), (3, 1, 3, -1), (2, 1, 3, -1), (1, -1, 2, 1)])
def test_node_split_second_order_against_exact(branches):
    node = MeshNode.from_branches(*branches)
    base = np.array([0.4, 0.3, 0.5, 0.7])  # k, d, mu, d_omega directions
    errs = []
    for s in (1e-2, 5e-3, 2.5e-3):
        k, d, mu, dw = s * base
        p = StringParams(node.omega_star + dw, k, d, mu)
        pair = node_split(node, p)
        roots, _, ok = exact_pair(p, pair)
        assert ok.all()
        errs.append(close_pair(pair, roots))
    assert 3.2 <= errs[0] / errs[1] <= 4.8
    assert 3.2 <= errs[1] / errs[2] <= 4.8


def test_track_node_split_is_continuous():
    tr = track_node_split(zero_speed_node(1), StringParams(0.0, mu=0.3), np.linspace(-0.05, 0.05, 201))
    assert np.max(np.abs(np.diff(tr, axis=0))) < 0.01


# -- special cases at rest nodes ------------------------------------------


def test_spring_examples():
    up, lo = spring_split(1, 0.3, 0.0)
    assert lo == 1j and up == pytest.approx(1j * (1 + 0.3 / TWO_PI))
    assert up.imag == pytest.approx(1.047746, abs=1e-6)
    gap1 = (spring_split(1, 0.3, 0.0)[0] - spring_split(1, 0.3, 0.0)[1]).imag
    gap2 = (spring_split(2, 0.3, 0.0)[0] - spring_split(2, 0.3, 0.0)[1]).imag
    assert gap2 == pytest.approx(gap1 / 2)
    assert close_pair(spring_split(3, 0.0, 0.2), [3j * 1.2, 3j * 0.8]) < 1e-14


def test_spring_keeps_roots_on_imaginary_axis():
    for om in (0.0, 0.01, 0.05):
        assert all(z.real == 0 for z in spring_split(1, 0.3, om))
        p = StringParams(om, k=0.05)
        roots, _, ok = exact_pair(p, spring_split(1, 0.05, om))
        assert ok.all() and np.max(np.abs(roots.real)) < 1e-9


def test_spring_exact_error_is_second_order():
    errs = []
    for k in (0.3, 0.15, 0.075):
        # exact nontrivial root at rest: omega tan(pi omega) = k / 2
        w, _ = newton_root(1j * (1 + k / TWO_PI), StringParams(0.0, k=k))[:2]
        errs.append(abs(spring_split(1, k, 0.0)[0] - w))
    assert 3.5 <= errs[0] / errs[1] <= 4.5 and 3.5 <= errs[1] / errs[2] <= 4.5


def test_damper_examples():
    b = damper_bubble(1, 0.3, 0.0)
    assert close_pair(b.eigs, [1j, 1j - 0.3 / TWO_PI]) < 1e-15
    assert b.halfwidth == pytest.approx(0.3 / (4 * math.pi))
    assert damper_bubble(2, 0.3, 0.0).halfwidth == pytest.approx(b.halfwidth / 2)


def test_damper_bubble_geometry():
    d, n = 0.3, 2
    res = []
    for om in np.linspace(-0.02, 0.02, 41):
        b = damper_bubble(n, d, om)
        for lam in b.eigs:
            if b.on_ellipse:
                assert abs(b.ellipse_residual(n, om, lam)) < 1e-14
            else:
                assert abs(b.hyperbola_residual(n, om, lam)) < 1e-14
            res.append((om, lam.real))
    best = max(res, key=lambda t: t[1])
    assert best[1] == pytest.approx(0.0, abs=1e-15) and best[0] == pytest.approx(0.0, abs=1e-12)


def test_friction_examples():
    fs = friction_split(1, 0.3, 0.01)
    assert fs.re_small[0] == pytest.approx(0.015451, abs=1e-6)
    assert fs.re_small[0] == pytest.approx(math.sqrt(math.pi * 0.3 * 0.01) / TWO_PI)
    rest = friction_split(1, 0.3, 0.0)
    assert rest.eigs == (1j, 1j)
    far = friction_split(1, 0.3, 50.0)
    assert far.re[0] == pytest.approx(0.3 / (4 * math.pi), rel=1e-4)
    assert far.re_large[0] == pytest.approx(far.re[0], rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10), st.floats(-1, 1), st.floats(-0.5, 0.5))
def test_friction_parts_recombine(n, mu, omega):
    fs = friction_split(n, mu, omega)
    w = (1j * n * omega + mu / (4 * math.pi)) ** 2 - mu**2 / (16 * math.pi**2)
    for re, im in zip(fs.re, fs.im):
        lam = complex(re, im)
        assert abs((lam - 1j * n) ** 2 - w) < 1e-10
    perm = best_assignment(np.array([complex(r, i) for r, i in zip(fs.re, fs.im)]), np.array(fs.eigs))
    assert np.max(np.abs(np.array([complex(r, i) for r, i in zip(fs.re, fs.im)])
                         - np.array(fs.eigs)[list(perm)])) < 1e-10
