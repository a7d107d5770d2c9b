import numpy as np
import pytest

from rws.errors import NotInRange, ZeroShift
from rws.fields import (
    GridField,
    KernelElement,
    SpectralField,
    TorusProfile,
    analyze,
    integrate,
    kernel_embed,
    spectral_h1,
    spectral_l2,
    synthesize,
    t_nodes,
    x_nodes,
)
from rws.operators import (
    OperatorWorkspace,
    dalembert_apply,
    dalembert_inverse,
    difference_quotient,
    eigen_table,
    project_kernel,
    project_range,
    translate,
    weak_residual,
)

from conftest import random_band_limited, random_profile, random_range_field


def test_eigen_table():
    lam, kernel = eigen_table(3, 4)
    for i, l in enumerate(range(-3, 4)):
        for j in range(1, 5):
            assert lam[i, j - 1] == j**2 - l**2
            assert kernel[i, j - 1] == (j == abs(l))


def test_cbar_bruteforce(ws):
    # independent scan of sqrt(1 + l^2 + j^2)/|j^2 - l^2| over range modes
    best = 0.0
    for l in range(-ws.L, ws.L + 1):
        for j in range(1, ws.J + 1):
            if j == abs(l):
                continue
            best = max(best, np.sqrt(1 + l**2 + j**2) / abs(j**2 - l**2))
    assert abs(ws.cbar - best) < 1e-15
    assert abs(ws.cbar - np.sqrt(2.0)) < 1e-15  # attained at (l, j) = (0, 1)
    assert ws.cbar >= 1.0


def test_apply_inverse_roundtrip(rng):
    for _ in range(100):
        f = random_range_field(rng, 16, 16)
        w = dalembert_inverse(f)
        back = dalembert_apply(w)
        scale = max(1.0, float(np.max(np.abs(f.coeffs))))
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12 * scale
        again = dalembert_inverse(dalembert_apply(w))
        assert np.max(np.abs(again.coeffs - w.coeffs)) < 1e-12


def test_inverse_rejects_kernel_content(rng):
    f = random_range_field(rng, 8, 8)
    f.coeffs[8 + 2, 2 - 1] = 0.5  # mode (l, j) = (2, 2) sits in the kernel
    f.coeffs[8 - 2, 2 - 1] = 0.5
    with pytest.raises(NotInRange):
        dalembert_inverse(f)


def test_inverse_h1_bound(ws, rng):
    # || Box^{-1} f ||_{H1} <= cbar || f ||_{L2}, per-mode multiplier bound
    for _ in range(20):
        f = random_range_field(rng, ws.L, ws.J)
        w = dalembert_inverse(f)
        assert spectral_h1(w) <= ws.cbar * spectral_l2(f) * (1 + 1e-12)


def test_project_kernel_picks_resonant_modes():
    # sin t sin x is resonant; sin 2t sin x is not
    g = GridField.from_callable(
        lambda t, x: np.sin(t) * np.sin(x) + 0.7 * np.sin(2 * t) * np.sin(x)
    )
    v = project_kernel(g, "spectral")
    ref = GridField.from_callable(lambda t, x: np.sin(t) * np.sin(x))
    assert np.max(np.abs(v.embed().values - ref.values)) < 1e-12
    r = project_range(g)
    rg = synthesize(r)
    ref2 = GridField.from_callable(lambda t, x: 0.7 * np.sin(2 * t) * np.sin(x))
    assert np.max(np.abs(rg.values - ref2.values)) < 1e-10


def test_projection_methods_agree(rng):
    for _ in range(10):
        s = random_band_limited(rng, 10, 10)
        g = synthesize(s, 128, 64)
        a = project_kernel(g, "spectral", L=10, J=10)
        b = project_kernel(g, "integral", L=10, J=10)
        pa, pb = a.profile.coeffs, b.profile.coeffs
        n = min(pa.size, pb.size)
        off_a, off_b = (pa.size - n) // 2, (pb.size - n) // 2
        diff = np.max(np.abs(pa[off_a : off_a + n] - pb[off_b : off_b + n]))
        assert diff < 1e-8


def test_projection_identity_on_kernel(rng):
    v = random_profile(rng, M=8)
    got = project_kernel(v.embed(128, 64), "integral", L=16, J=16)
    a, b = v.profile.coeffs, got.profile.coeffs
    Ma, Mb = v.profile.M, got.profile.M
    for m in range(-Mb, Mb + 1):
        want = a[Ma + m] if abs(m) <= Ma else 0.0
        assert abs(b[Mb + m] - want) < 1e-12


def test_projection_kills_time_independent_fields():
    g = GridField.from_callable(lambda t, x: np.sin(x) + 0.2 * np.sin(3 * x))
    v = project_kernel(g, "spectral")
    assert np.max(np.abs(v.profile.coeffs)) < 1e-14
    w = project_kernel(g, "integral")
    assert np.max(np.abs(w.profile.coeffs)) < 1e-14


def test_projection_idempotent_and_orthogonal(rng):
    s = random_band_limited(rng, 12, 12)
    g = synthesize(s, 128, 64)
    v = project_kernel(g, "spectral", L=12, J=12)
    r = project_range(g, L=12, J=12)
    # idempotence
    v2 = project_kernel(v.embed(128, 64), "spectral", L=12, J=12)
    pa, pb = v.profile.coeffs, v2.profile.coeffs
    assert np.max(np.abs(pa - pb)) < 1e-12
    r2 = project_range(synthesize(r, 128, 64), L=12, J=12)
    assert np.max(np.abs(r2.coeffs - r.coeffs)) < 1e-12
    # orthogonality in L2
    prod = GridField(v.embed(128, 64).values * synthesize(r, 128, 64).values)
    assert abs(integrate(prod)) < 1e-10
    # reconstruction
    total = v.embed(128, 64).values + synthesize(r, 128, 64).values
    assert np.max(np.abs(total - g.values)) < 1e-10


def test_weak_residual_zero_solution():
    u = GridField(np.zeros((64, 33)))
    rhs = GridField.from_callable(lambda t, x: np.sin(x), nt=64, nx=32)
    # || -sin x ||_{L2(Omega)} = pi
    assert abs(weak_residual(u, rhs, 16, 16) - np.pi) < 1e-12


def test_weak_residual_of_inverse(rng):
    for _ in range(10):
        f = random_range_field(rng, 12, 12)
        w = dalembert_inverse(f)
        u = synthesize(w, 128, 64)
        rhs = synthesize(f, 128, 64)
        assert weak_residual(u, rhs, 12, 12) < 1e-12


def test_translate_and_difference_quotient(rng):
    s = random_band_limited(rng, 6, 6)
    g = synthesize(s, 64, 32)
    with pytest.raises(ZeroShift):
        translate(g, 0)
    with pytest.raises(ZeroShift):
        difference_quotient(g, 0.5)
    th = translate(g, 3)
    assert np.array_equal(th.values[0], g.values[3])
    # discrete Leibniz rule: D_h(uv) = D_h u * T_h v + u * D_h v (exact)
    s2 = random_band_limited(rng, 6, 6)
    g2 = synthesize(s2, 64, 32)
    lhs = difference_quotient(GridField(g.values * g2.values), 3).values
    rhs = (
        difference_quotient(g, 3).values * translate(g2, 3).values
        + g.values * difference_quotient(g2, 3).values
    )
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    # summation by parts: <D_h u, v> = -<u, D_{-h} v> (exact on the grid)
    ip1 = integrate(GridField(difference_quotient(g, 3).values * g2.values))
    ip2 = integrate(GridField(g.values * difference_quotient(g2, -3).values))
    assert abs(ip1 + ip2) < 1e-12


def test_difference_quotient_l2_bound(rng):
    # ||D_h v||_{L2} <= ||v_t||_{L2} for band-limited fields
    for shift in (1, 2, 5):
        s = random_band_limited(rng, 8, 8)
        g = synthesize(s, 64, 32)
        dq = difference_quotient(g, shift)
        ll = s.ells[:, None].astype(float)
        vt = SpectralField(1j * ll * s.coeffs, s.L, s.J)
        assert spectral_l2(analyze(dq, 8, 8)) <= spectral_l2(vt) * (1 + 1e-12)


def test_inverse_via_psi_integral_formula(small_ws, rng):
    """Box^{-1} f equals the range projection of the classical integral
    representation psi(t,x) = -(1/2) int_x^pi int_{t+x-xi}^{t-x+xi} f
    + c (pi - x)/pi."""
    L = J = 4
    nt, nx = 32, 16
    f = random_range_field(rng, L, J)
    fg = synthesize(f, nt, nx)
    # time-coefficient functions A_l(xi) of f, evaluated at Gauss nodes
    nodes, wts = np.polynomial.legendre.leggauss(60)
    ts = t_nodes(nt)
    xs = x_nodes(nx)
    jj = np.arange(1, J + 1)

    def A(l, xi):
        row = f.coeffs[l + L]
        return np.sin(np.outer(xi, jj)) @ row

    psi = np.zeros((nt, nx + 1))
    # c = (1/2) int_0^pi int_{t-xi}^{t+xi} f d tau d xi  (t-independent here)
    xi_c = 0.5 * np.pi * (nodes + 1.0)
    w_c = 0.5 * np.pi * wts
    c_val = 0.5 * np.sum(w_c * 2.0 * xi_c * A(0, xi_c).real)
    for l in range(-L, L + 1):
        if l == 0:
            continue
        # int_{t-xi}^{t+xi} e^{il tau} = e^{ilt} 2 sin(l xi)/l
        c_val += 0.5 * np.real(
            np.sum(w_c * (2.0 * np.sin(l * xi_c) / l) * A(l, xi_c))
        )
    for q, xq in enumerate(xs):
        if xq >= np.pi:
            break
        xi = 0.5 * (np.pi - xq) * (nodes + 1.0) + xq
        w = 0.5 * (np.pi - xq) * wts
        acc = np.zeros(nt, dtype=complex)
        # l = 0: integrand length (t-x+xi) - (t+x-xi) = 2(xi - x)
        acc += np.sum(w * 2.0 * (xi - xq) * A(0, xi).real)
        for l in range(-L, L + 1):
            if l == 0:
                continue
            inner = (np.exp(1j * l * (xi - xq)) - np.exp(1j * l * (xq - xi))) / (
                1j * l
            )
            coef = np.sum(w * inner * A(l, xi))
            acc += coef * np.exp(1j * l * ts)
        psi[:, q] = -0.5 * np.real(acc) + c_val * (np.pi - xq) / np.pi
    psi[:, -1] = 0.0
    got = project_range(GridField(psi), L=L, J=J)
    expect = dalembert_inverse(f)
    assert np.max(np.abs(got.coeffs - expect.coeffs)) < 1e-6
