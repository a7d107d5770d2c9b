"""Range-equation solver: Picard iteration against a Newton oracle."""

import numpy as np
import pytest

from conftest import random_profile

from rws.errors import Diverged, MaxIterations
from rws.fields import (
    GridField,
    KernelElement,
    SpectralField,
    TorusProfile,
    spectral_l2,
)
from rws.forcing import (
    contraction_constants,
    custom_forcing,
    evaluate_f,
    power_plus_forcing,
)
from rws.operators import OperatorWorkspace, dalembert_inverse, project_range
from rws.range_solver import range_residual, solve_range

SMALL = dict(L=6, J=6, nt=32, nx=16)


def sin2x_spec(nt=32, nx=16):
    """f(t,x,u) = u^2 + sin 2x, the worked example nonlinearity."""
    h = GridField.from_callable(lambda tt, xx: np.sin(2 * xx), nt, nx)
    return power_plus_forcing(1, 1.0, h)


def cos_kernel(scale=1.0):
    return KernelElement(TorusProfile.from_coefficients([0.5 * scale]))


# ---------------------------------------------------------------- basics


def test_eps_zero_returns_zero_immediately():
    ws = OperatorWorkspace(**SMALL)
    sol = solve_range(cos_kernel(), 0.0, sin2x_spec(), ws)
    assert sol.iterations <= 1
    assert spectral_l2(sol.w) == 0.0
    assert sol.residual == 0.0


def test_u_independent_forcing_exact_inverse():
    # f = sin 2x alone: the map is constant, w = eps*sin(2x)/4 exactly
    # (lambda = 4 at the (0,2) mode), reached after one application.
    ws = OperatorWorkspace(**SMALL)
    h = GridField.from_callable(lambda tt, xx: np.sin(2 * xx), 32, 16)
    spec = custom_forcing(
        lambda tt, xx, uu, eps: np.sin(2 * xx) + 0.0 * uu,
        lambda tt, xx, uu, eps: 0.0 * uu,
    )
    eps = 0.3
    sol = solve_range(KernelElement(TorusProfile.from_coefficients([0.0])), eps, spec, ws)
    assert sol.iterations <= 2
    want = ws.analyze(GridField(eps * h.values / 4.0))
    assert spectral_l2(sol.w - want) <= 1e-14


def test_zero_kernel_energy_invariant():
    ws = OperatorWorkspace(**SMALL)
    sol = solve_range(cos_kernel(), 0.01, sin2x_spec(), ws)
    assert np.all(sol.w.coeffs[ws.kernel_mask] == 0.0)


def test_converges_fast_at_small_eps():
    ws = OperatorWorkspace(**SMALL)
    sol = solve_range(cos_kernel(0.0), 0.01, sin2x_spec(), ws)
    assert sol.iterations <= 30
    assert sol.residual <= 1e-12
    # leading order w = eps*sin(2x)/4 + O(eps^2)
    lead = GridField.from_callable(lambda tt, xx: 0.01 * np.sin(2 * xx) / 4.0, 32, 16)
    assert spectral_l2(sol.w - ws.analyze(lead)) <= 5e-4 * 0.01


# ---------------------------------------------------------------- Newton oracle


def newton_solve(v, eps, spec, ws, tol=1e-13):
    """Dense Newton iteration on the truncated coefficient system.

    Unknowns are the real/imaginary parts of the range coefficients;
    the residual is G(w) = w - eps*Box^{-1}Pi f(v+w) and the Jacobian
    is assembled column by column from finite differences of G.  Slow
    and completely independent of the Picard loop above.
    """
    vg = ws.embed(v)

    def gmap(w):
        u = GridField(vg.values + ws.synthesize(w).values)
        fr = project_range(ws.analyze(evaluate_f(spec, u, eps)))
        return w - dalembert_inverse(fr) * eps

    def pack(w):
        return np.concatenate([w.coeffs.real.ravel(), w.coeffs.imag.ravel()])

    shape = (2 * ws.L + 1, ws.J)
    size = shape[0] * shape[1]

    def unpack(z):
        c = z[:size].reshape(shape) + 1j * z[size:].reshape(shape)
        # keep the packed vector consistent with a real field
        c = 0.5 * (c + np.conj(c[::-1, :]))
        c[ws.kernel_mask] = 0.0
        return SpectralField(c, ws.L, ws.J)

    z = pack(SpectralField.zeros(ws.L, ws.J))
    for _ in range(40):
        g = pack(gmap(unpack(z)))
        if np.linalg.norm(g) < tol:
            break
        jac = np.empty((2 * size, 2 * size))
        step = 1e-7
        for col in range(2 * size):
            dz = z.copy()
            dz[col] += step
            jac[:, col] = (pack(gmap(unpack(dz))) - g) / step
        # columns touched by the reality/kernel clean-up can be singular;
        # least squares keeps the step well defined on the active set
        z = z - np.linalg.lstsq(jac, g, rcond=None)[0]
    return unpack(z)


@pytest.mark.parametrize("trial", range(10))
def test_matches_newton_oracle(trial):
    ws = OperatorWorkspace(L=3, J=3, nt=16, nx=8)
    rng = np.random.default_rng(100 + trial)
    v = random_profile(rng, M=2, scale=0.5)
    eps = float(rng.uniform(0.002, 0.02)) * (1 if trial % 2 == 0 else -1)
    h = GridField.from_callable(lambda tt, xx: np.sin(2 * xx), 16, 8)
    spec = power_plus_forcing(1, 1.0, h, L=3, J=3)
    picard = solve_range(v, eps, spec, ws)
    newton = newton_solve(v, eps, spec, ws)
    assert spectral_l2(picard.w - newton) <= 1e-9


# ---------------------------------------------------------------- contraction


def test_contraction_below_advisory_threshold():
    ws = OperatorWorkspace(**SMALL)
    spec = sin2x_spec()
    c0, eps0 = contraction_constants(spec, 1.0, ws)
    for eps in (eps0, -eps0, 0.5 * eps0):
        sol = solve_range(cos_kernel(0.2), eps, spec, ws, eps0=eps0)
        assert sol.contraction_estimate <= 0.55
        assert not sol.beyond_paper_bound


def test_advisory_flag_and_warning_above_threshold():
    ws = OperatorWorkspace(**SMALL)
    spec = sin2x_spec()
    _, eps0 = contraction_constants(spec, 1.0, ws)
    with pytest.warns(UserWarning, match="advisory"):
        sol = solve_range(cos_kernel(0.0), 3.0 * eps0, spec, ws, eps0=eps0)
    assert sol.beyond_paper_bound
    assert sol.residual <= 1e-12


def test_diverged_at_large_eps():
    ws = OperatorWorkspace(**SMALL)
    with pytest.raises(Diverged):
        solve_range(cos_kernel(0.0), 50.0, sin2x_spec(), ws)


def test_max_iterations_carries_diagnostics():
    ws = OperatorWorkspace(**SMALL)
    with pytest.raises(MaxIterations) as err:
        solve_range(cos_kernel(0.0), 0.01, sin2x_spec(), ws, max_iter=2)
    assert err.value.last_delta > 0
    assert err.value.contraction_estimate < 1.0


def test_rejects_nonpositive_tol():
    ws = OperatorWorkspace(**SMALL)
    with pytest.raises(ValueError):
        solve_range(cos_kernel(), 0.01, sin2x_spec(), ws, tol=0.0)


# ---------------------------------------------------------------- residual


def test_residual_definition_at_w_zero():
    ws = OperatorWorkspace(**SMALL)
    spec = sin2x_spec()
    v = cos_kernel(0.0)
    eps = 0.07
    r = range_residual(v, SpectralField.zeros(ws.L, ws.J), eps, spec, ws)
    # w = 0: residual is |eps| * ||Box^{-1} Pi f(v)||
    fr = project_range(ws.analyze(GridField.from_callable(
        lambda tt, xx: np.sin(2 * xx), 32, 16)))
    want = abs(eps) * spectral_l2(dalembert_inverse(fr))
    assert r == pytest.approx(want, rel=1e-12)
    assert r > 0


def test_perturbed_residual_grows_linearly():
    ws = OperatorWorkspace(**SMALL)
    spec = sin2x_spec()
    v = cos_kernel(0.1)
    sol = solve_range(v, 0.01, spec, ws)
    bump = ws.analyze(GridField.from_callable(
        lambda tt, xx: np.sin(2 * xx), 32, 16))
    rs = []
    for d in (1e-6, 2e-6, 4e-6):
        rs.append(range_residual(v, sol.w + bump * d, 0.01, spec, ws))
    assert rs[1] == pytest.approx(2 * rs[0], rel=1e-3)
    assert rs[2] == pytest.approx(4 * rs[0], rel=1e-3)


def test_warm_start_converges_faster():
    ws = OperatorWorkspace(**SMALL)
    spec = sin2x_spec()
    v = cos_kernel(0.2)
    cold = solve_range(v, 0.01, spec, ws)
    warm = solve_range(v, 0.011, spec, ws, w0=cold.w)
    assert warm.iterations <= cold.iterations
    assert warm.residual <= 1e-12


# ---------------------------------------------------------------- continuity


def test_lipschitz_continuity_in_v():
    ws = OperatorWorkspace(**SMALL)
    spec = sin2x_spec()
    eps = 0.005
    rng = np.random.default_rng(7)
    vbar = random_profile(rng, M=3, scale=0.3)
    wbar = solve_range(vbar, eps, spec, ws).w
    for k in range(5):
        dv = random_profile(rng, M=3, scale=10.0 ** (-1 - k))
        vn = KernelElement(vbar.profile + dv.profile)
        wn = solve_range(vn, eps, spec, ws).w
        dist_v = KernelElement(vn.profile - vbar.profile).l2()
        assert spectral_l2(wn - wbar) <= 1.1 * dist_v


def test_w_norm_linear_in_eps():
    ws = OperatorWorkspace(**SMALL)
    spec = sin2x_spec()
    v = cos_kernel(0.1)
    eps_vals = np.geomspace(1e-4, 1e-2, 5)
    norms = [spectral_l2(solve_range(v, float(e), spec, ws).w) for e in eps_vals]
    slope = np.polyfit(np.log(eps_vals), np.log(norms), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)
