"""Reduced functional, gradient consistency, and ball-constrained descent."""

import numpy as np
import pytest

from conftest import random_profile

from rws.errors import ConfigError
from rws.fields import (
    GridField,
    KernelElement,
    TorusProfile,
    integrate,
    kernel_pairing,
)
from rws.forcing import (
    custom_forcing,
    evaluate_F,
    evaluate_f,
    power_plus_forcing,
    rescale_resonant,
)
from rws.identities import cutoff_variation
from rws.operators import OperatorWorkspace, eigen_table, weak_residual
from rws.range_solver import range_residual, solve_range
from rws.reducer import (
    MinimizeConfig,
    directional_derivative,
    minimize_in_ball,
    reduced_functional,
    reduced_gradient,
)

SMALL = dict(L=6, J=6, nt=32, nx=16)
MED = dict(L=16, J=16, nt=64, nx=32)


def action_value(u, eps, spec, ws):
    """The full Lagrangian action at u: an oracle the reduced value must match.

    integral[u_t^2/2 - u_x^2/2 + eps*F(u)], with the quadratic part
    evaluated spectrally through the eigenvalues.
    """
    us = ws.analyze(u)
    lam, _ = eigen_table(ws.L, ws.J)
    quad = -0.5 * np.pi**2 * float(np.sum(lam * np.abs(us.coeffs) ** 2))
    return quad + eps * integrate(evaluate_F(spec, u, eps))


def quad_spec(nt, nx, slope=0.0):
    """f = (1 + slope*x) u^2 + sin 2x, with the closed-form primitive."""

    def f(tt, xx, uu, eps):
        return (1.0 + slope * xx) * uu**2 + np.sin(2 * xx) + 0.0 * uu

    def f_u(tt, xx, uu, eps):
        return 2.0 * (1.0 + slope * xx) * uu

    def F(tt, xx, uu, eps):
        return (1.0 + slope * xx) * uu**3 / 3.0 + np.sin(2 * xx) * uu

    return custom_forcing(f, f_u, F=F)


# ------------------------------------------------------- functional values


def test_phi_zero_at_eps_zero():
    ws = OperatorWorkspace(**SMALL)
    rng = np.random.default_rng(0)
    v = random_profile(rng, M=4)
    assert reduced_functional(v, 0.0, quad_spec(32, 16), ws) == 0.0


def test_phi_matches_action_u_independent():
    # f = h alone: w = eps*Box^{-1}h and both formulas are quadratures
    # of explicit fields
    ws = OperatorWorkspace(**SMALL)
    spec = custom_forcing(
        lambda tt, xx, uu, eps: np.sin(2 * xx) + 0.0 * uu,
        lambda tt, xx, uu, eps: 0.0 * uu,
        F=lambda tt, xx, uu, eps: np.sin(2 * xx) * uu,
    )
    rng = np.random.default_rng(1)
    v = random_profile(rng, M=4)
    eps = 0.05
    phi = reduced_functional(v, eps, spec, ws)
    w = solve_range(v, eps, spec, ws).w
    u = GridField(ws.embed(v).values + ws.synthesize(w).values)
    assert abs(phi - action_value(u, eps, spec, ws)) <= 1e-9


@pytest.mark.parametrize("seed", [2, 3, 4])
def test_phi_matches_action_random(seed):
    ws = OperatorWorkspace(**SMALL)
    spec = quad_spec(32, 16)
    rng = np.random.default_rng(seed)
    v = random_profile(rng, M=4, scale=0.5)
    eps = float(rng.uniform(0.005, 0.02))
    phi = reduced_functional(v, eps, spec, ws)
    w = solve_range(v, eps, spec, ws).w
    u = GridField(ws.embed(v).values + ws.synthesize(w).values)
    assert abs(phi - action_value(u, eps, spec, ws)) <= 1e-8


def test_phi_l2_continuity():
    ws = OperatorWorkspace(**SMALL)
    spec = quad_spec(32, 16)
    rng = np.random.default_rng(5)
    vbar = random_profile(rng, M=4, scale=0.4)
    dv = random_profile(rng, M=4, scale=1.0)
    phi_bar = reduced_functional(vbar, 0.01, spec, ws)
    diffs = []
    for n in range(5):
        vn = KernelElement(vbar.profile + dv.profile * 0.25**n)
        diffs.append(abs(reduced_functional(vn, 0.01, spec, ws) - phi_bar))
    assert all(diffs[i + 1] < diffs[i] for i in range(4))
    assert diffs[-1] <= 1e-4 * (1.0 + abs(phi_bar))


# ------------------------------------------------------------- gradient


def test_gradient_zero_at_eps_zero():
    ws = OperatorWorkspace(**SMALL)
    rng = np.random.default_rng(6)
    v = random_profile(rng, M=4)
    g = reduced_gradient(v, 0.0, quad_spec(32, 16), ws)
    assert g.l2() == 0.0
    assert abs(g.profile.mean) == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_central_difference(seed):
    # the x-weight breaks the parity cancellations so the third
    # derivative is generic and the expected O(delta^2) law shows
    ws = OperatorWorkspace(**SMALL)
    spec = quad_spec(32, 16, slope=0.3)
    rng = np.random.default_rng(200 + seed)
    v = random_profile(rng, M=3, scale=0.6)
    phi_dir = random_profile(rng, M=3, scale=1.0)
    eps = 0.02
    g = reduced_gradient(v, eps, spec, ws)
    exact = kernel_pairing(g, phi_dir)

    def central(delta):
        vp = KernelElement(v.profile + phi_dir.profile * delta)
        vm = KernelElement(v.profile - phi_dir.profile * delta)
        fp = reduced_functional(vp, eps, spec, ws)
        fm = reduced_functional(vm, eps, spec, ws)
        return (fp - fm) / (2.0 * delta)

    e1 = abs(central(1e-3) - exact)
    e2 = abs(central(5e-4) - exact)
    order = np.log2(e1 / e2)
    assert order >= 1.9


def test_gradient_ratio_vanishes_for_resonant_structure():
    # f = u^2 + h with h range-only: the kernel projection of v^2
    # cancels, so grad/eps itself shrinks linearly as eps -> 0
    ws = OperatorWorkspace(**SMALL)
    h = GridField.from_callable(lambda tt, xx: np.sin(2 * xx), 32, 16)
    spec = power_plus_forcing(1, 1.0, h)
    rng = np.random.default_rng(8)
    v = random_profile(rng, M=4, scale=0.5)
    r1 = reduced_gradient(v, 1e-3, spec, ws).l2() / 1e-3
    r2 = reduced_gradient(v, 1e-4, spec, ws).l2() / 1e-4
    assert r2 <= 0.2 * r1


# ------------------------------------------------------------- minimization


def test_minimize_eps_zero_returns_init():
    ws = OperatorWorkspace(**SMALL)
    rng = np.random.default_rng(9)
    v = random_profile(rng, M=4, scale=0.1)
    state = minimize_in_ball(5.0, 0.0, quad_spec(32, 16), init=v, ws=ws)
    assert state.converged
    assert state.iterations == 0
    assert state.grad_h1_norm == 0.0
    assert np.allclose(state.v.profile.coeffs, v.profile.coeffs)


def test_minimize_rejects_bad_inputs():
    ws = OperatorWorkspace(**SMALL)
    with pytest.raises(ConfigError):
        minimize_in_ball(0.0, 0.01, quad_spec(32, 16), ws=ws)
    big = KernelElement(TorusProfile.from_coefficients([10.0]))
    with pytest.raises(ConfigError):
        minimize_in_ball(1.0, 0.01, quad_spec(32, 16), init=big, ws=ws)


def rescaled_theorem1(nt=64, nx=32):
    h = GridField.from_callable(lambda tt, xx: np.sin(xx), nt, nx)
    H = GridField.from_callable(lambda tt, xx: np.sin(xx), nt, nx)
    return rescale_resonant(power_plus_forcing(1, 1.0, h), H)


def test_minimize_rescaled_problem_interior():
    ws = OperatorWorkspace(**MED)
    prob = rescaled_theorem1()
    cfg = MinimizeConfig(tol_grad=1e-10)
    state = minimize_in_ball(5.0, 1e-4, prob.spec, cfg=cfg, ws=ws)
    assert state.converged
    assert state.interior
    assert state.grad_h1_norm <= 1e-10
    assert state.v_h1 <= state.r_ball + 1e-12
    # returned w really is the fixed point at the returned v
    assert range_residual(state.v, state.w, 1e-4, prob.spec, ws) <= 1e-11
    # assembled residual of the rescaled equation
    u = GridField(ws.embed(state.v).values + ws.synthesize(state.w).values)
    rhs = GridField(1e-4 * evaluate_f(prob.spec, u, 1e-4).values)
    assert weak_residual(u, rhs, L=ws.L, J=ws.J) <= 1e-7


def cubic_spec(nt, nx):
    """f = u^3 + sin t sin x: the cubic keeps a genuine kernel component,
    so minimization has real work to do (the quartic term is coercive)."""

    def f(tt, xx, uu, eps):
        return uu**3 + np.sin(tt) * np.sin(xx)

    def f_u(tt, xx, uu, eps):
        return 3.0 * uu**2

    def F(tt, xx, uu, eps):
        return uu**4 / 4.0 + np.sin(tt) * np.sin(xx) * uu

    return custom_forcing(f, f_u, F=F)


def test_minimize_descent_monotone_and_in_ball():
    ws = OperatorWorkspace(**MED)
    cfg = MinimizeConfig(tol_grad=2e-7)
    state = minimize_in_ball(5.0, 1e-2, cubic_spec(64, 32), cfg=cfg, ws=ws)
    assert state.converged
    phis = state.phi_history
    assert len(phis) > 2  # a real descent happened
    slack = [1e-12 * (1.0 + abs(p)) for p in phis[:-1]]
    assert all(phis[i + 1] <= phis[i] + slack[i] for i in range(len(phis) - 1))
    assert state.v_h1 <= state.r_ball + 1e-12


def test_minimize_negative_eps_maximizes():
    # same landscape, eps < 0: accepted steps now increase Phi
    ws = OperatorWorkspace(**MED)
    cfg = MinimizeConfig(tol_grad=2e-7)
    state = minimize_in_ball(5.0, -1e-2, cubic_spec(64, 32), cfg=cfg, ws=ws)
    assert state.converged
    phis = state.phi_history
    assert len(phis) > 2
    assert all(
        phis[i + 1] >= phis[i] - 1e-12 * (1.0 + abs(phis[i]))
        for i in range(len(phis) - 1)
    )


def kernel_mode_spec(nt, nx):
    """u-independent forcing that IS a kernel element: sin t sin x."""

    def f(tt, xx, uu, eps):
        return np.sin(tt) * np.sin(xx) + 0.0 * uu

    return custom_forcing(
        f,
        lambda tt, xx, uu, eps: 0.0 * uu,
        F=lambda tt, xx, uu, eps: np.sin(tt) * np.sin(xx) * uu,
    )


def test_minimize_boundary_triggers_doubling():
    # a constant kernel-directed gradient pushes the iterate to the
    # boundary no matter the radius; the ball doubles its allotted
    # three times and the run reports a non-interior, non-converged end
    ws = OperatorWorkspace(**SMALL)
    state = minimize_in_ball(1.0, 1.0, kernel_mode_spec(32, 16), ws=ws)
    assert state.r_ball == 8.0
    assert not state.interior
    assert not state.converged
    assert state.v_h1 <= state.r_ball + 1e-12
    assert state.v_h1 >= state.r_ball - 1e-3


def test_minimize_boundary_one_sided_condition():
    # at a boundary minimum with eps > 0 the derivative along v itself
    # must be <= 0 (pointing inward)
    ws = OperatorWorkspace(**SMALL)
    spec = kernel_mode_spec(32, 16)
    state = minimize_in_ball(1.0, 1.0, spec, ws=ws)
    value, _ = directional_derivative(state.v, state.v, 1.0, spec, ws)
    assert value <= 1e-10


def test_minimize_max_iter_flag():
    # constant kernel gradient: one step cannot reach stationarity
    ws = OperatorWorkspace(**SMALL)
    cfg = MinimizeConfig(max_iter=1)
    state = minimize_in_ball(5.0, 1.0, kernel_mode_spec(32, 16), cfg=cfg, ws=ws)
    assert not state.converged
    assert state.iterations == 1


# ------------------------------------------------------------ multiplicity


def multiplicity_setup(nt=64, nx=32):
    v0 = KernelElement(TorusProfile.from_coefficients([0.5]))  # cos profile
    hv = -(v0.embed(nt, nx).values ** 2)

    def f(tt, xx, uu, eps):
        return uu**2 + hv

    def f_u(tt, xx, uu, eps):
        return 2.0 * uu

    def F(tt, xx, uu, eps):
        return uu**3 / 3.0 + hv * uu

    return v0, custom_forcing(f, f_u, F=F)


def test_multiplicity_two_distinct_states():
    ws = OperatorWorkspace(**MED)
    v0, spec = multiplicity_setup()
    eps = 1e-2
    near = minimize_in_ball(10.0, eps, spec, init=v0, ws=ws)
    small = minimize_in_ball(10.0, eps, spec, init=None, ws=ws)
    assert near.converged and small.converged
    # v0 solves the equation exactly: the iteration must not move it
    assert near.iterations == 0
    assert abs(near.v.l2() - v0.l2()) <= 1e-12
    assert abs(near.v.l2() - small.v.l2()) >= 0.5


# ------------------------------------------------ directional derivative


def test_directional_derivative_small_at_interior_minimum():
    ws = OperatorWorkspace(**MED)
    prob = rescaled_theorem1()
    cfg = MinimizeConfig(tol_grad=1e-10)
    state = minimize_in_ball(5.0, 1e-4, prob.spec, cfg=cfg, ws=ws)
    rng = np.random.default_rng(11)
    phi_dir = random_profile(rng, M=8, scale=1.0)
    value, _ = directional_derivative(state.v, phi_dir, 1e-4, prob.spec, ws)
    assert abs(value) <= 1e-7 * (1.0 + phi_dir.h1())


def test_cutoff_variation_is_admissible():
    ws = OperatorWorkspace(**MED)
    v0, spec = multiplicity_setup()
    state = minimize_in_ball(10.0, 1e-2, spec, init=v0, ws=ws)
    peak = float(np.max(np.abs(state.v.embed(64, 32).values)))
    cv = cutoff_variation(state.v, 0.9 * peak)
    value, admissible = directional_derivative(state.v, cv, 1e-2, spec, ws)
    assert admissible > 0.0
    assert np.isfinite(value)
