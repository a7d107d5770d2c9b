"""The reduced functional on the kernel and its constrained minimization.

With w(v, eps) from the range solver, every kernel element v gets a
reduced value

    Phi(v) = eps * integral[ F(v + w) - (1/2) f(v + w) w ]

whose critical points in the ball B_R of the kernel space complete the
solution u = v + w of Box u = eps*f(u).  The gradient is the kernel
projection of eps*f(v + w) -- differentiating through w contributes
nothing because w solves the range equation.

Minimization runs projected gradient descent in the H^1 geometry of
profile space (for eps < 0 the same loop maximizes: both branches
minimize Phi/eps).  Steps are preconditioned by the H^1 weight, Armijo
backtracked, and radially retracted onto the ball; if the iterate
settles on the boundary the ball is doubled a few times, since the
existence theory only holds for a sufficiently large radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fields import (
    GridField,
    KernelElement,
    SpectralField,
    TorusProfile,
    integrate,
    kernel_pairing_h1,
)
from .forcing import evaluate_F, evaluate_f
from .operators import OperatorWorkspace, project_kernel
from .range_solver import solve_range

__all__ = [
    "MinimizeConfig",
    "ReducedState",
    "reduced_functional",
    "reduced_gradient",
    "minimize_in_ball",
    "directional_derivative",
]


@dataclass
class MinimizeConfig:
    """Knobs for minimize_in_ball and its inner range solves."""

    tol_grad: float = 1e-8
    max_iter: int = 500
    tol_range: float = 1e-12
    max_iter_range: int = 200
    margin: float = 1e-3
    armijo_c: float = 1e-4
    step0: float = 1.0
    backtrack: float = 0.5
    max_backtracks: int = 45
    max_doublings: int = 3


@dataclass
class ReducedState:
    """Terminal iterate of the constrained minimization."""

    v: KernelElement
    phi_value: float
    grad: KernelElement
    grad_h1_norm: float
    v_h1: float
    interior: bool
    converged: bool
    iterations: int
    range_iterations: int
    r_ball: float
    w: SpectralField
    phi_history: list = field(default_factory=list, repr=False)


@dataclass
class _Probe:
    phi: float
    praw: KernelElement  # kernel projection of f(v+w), without the eps factor
    w: SpectralField
    range_iterations: int


def _zero_element(M):
    return KernelElement(TorusProfile(np.zeros(2 * M + 1, dtype=complex)))


def _precondition(p):
    """H^1 Riesz representative: divide profile mode m by its weight."""
    ms = p.profile.ms.astype(float)
    return KernelElement(TorusProfile(p.profile.coeffs / (1.0 + 2.0 * ms**2)))


def _dual_h1_norm(praw):
    q = _precondition(praw)
    return float(np.sqrt(max(kernel_pairing_h1(q, q), 0.0)))


def _probe(v, eps, spec, ws, cfg, w0=None):
    """Range solve at v plus the functional value and raw gradient there."""
    sol = solve_range(
        v, eps, spec, ws, tol=cfg.tol_range, max_iter=cfg.max_iter_range, w0=w0
    )
    wg = ws.synthesize(sol.w)
    u = GridField(ws.embed(v).values + wg.values)
    fg = evaluate_f(spec, u, eps)
    Fg = evaluate_F(spec, u, eps)
    phi = eps * (integrate(Fg) - 0.5 * integrate(GridField(fg.values * wg.values)))
    praw = project_kernel(fg, L=ws.L, J=ws.J)
    return _Probe(phi, praw, sol.w, sol.iterations)


def reduced_functional(v, eps, spec, ws=None, tol_range=1e-12, max_iter_range=200):
    """Phi(v) = eps * integral[F(v+w) - f(v+w) w / 2] at the converged w."""
    if ws is None:
        ws = OperatorWorkspace()
    cfg = MinimizeConfig(tol_range=tol_range, max_iter_range=max_iter_range)
    return _probe(v, eps, spec, ws, cfg).phi


def reduced_gradient(v, eps, spec, ws=None, tol_range=1e-12, max_iter_range=200):
    """Kernel projection of eps * f(v + w(v)), as a kernel element."""
    if ws is None:
        ws = OperatorWorkspace()
    cfg = MinimizeConfig(tol_range=tol_range, max_iter_range=max_iter_range)
    return _probe(v, eps, spec, ws, cfg).praw.scaled(eps)


def _retract(v, R):
    n = v.h1()
    if n <= R:
        return v
    return v.scaled(R / n)


def minimize_in_ball(R_ball, eps, spec, init=None, cfg=None, ws=None):
    """Constrained critical point of Phi over the ball ||v||_{H^1} <= R.

    Descends Phi/eps (which minimizes Phi for eps > 0 and maximizes it
    for eps < 0) by preconditioned projected gradient with Armijo
    backtracking.  The accepted step size is carried over between
    iterations (doubled after a clean accept) so the effective step
    adapts to the eps-scaled curvature of the landscape; the very first
    trial starts at cfg.step0.

    Returns a ReducedState; non-convergence is reported through the
    ``converged`` flag rather than an exception, with the last iterate
    as the result.
    """
    if ws is None:
        ws = OperatorWorkspace()
    if cfg is None:
        cfg = MinimizeConfig()
    if R_ball <= 0:
        raise ConfigError(f"R_ball must be positive, got {R_ball!r}")

    M = min(ws.L, ws.J)
    v = init if init is not None else _zero_element(M)
    if v.h1() > R_ball:
        raise ConfigError(
            f"init has H1 norm {v.h1():.3f} outside the ball of radius {R_ball}"
        )

    if eps == 0.0:
        # every point is stationary
        vh1 = v.h1()
        return ReducedState(
            v=v,
            phi_value=0.0,
            grad=_zero_element(M),
            grad_h1_norm=0.0,
            v_h1=vh1,
            interior=vh1 < R_ball - cfg.margin,
            converged=True,
            iterations=0,
            range_iterations=0,
            r_ball=float(R_ball),
            w=SpectralField.zeros(ws.L, ws.J),
            phi_history=[0.0],
        )

    R = float(R_ball)
    doublings = 0
    iters = 0
    range_total = 0
    converged = False
    t_init = cfg.step0

    cur = _probe(v, eps, spec, ws, cfg)
    range_total += cur.range_iterations
    history = [cur.phi]

    while True:
        stalled = False
        while iters < cfg.max_iter:
            q = _precondition(cur.praw)
            gnorm = abs(eps) * float(np.sqrt(max(kernel_pairing_h1(q, q), 0.0)))
            if gnorm < cfg.tol_grad:
                converged = True
                break
            iters += 1

            J = cur.phi / eps
            # function values carry range-solve noise of order
            # tol_range/|eps| in J units; allow that much slack so the
            # line search is not defeated by it (Phi itself then stays
            # monotone to ~1e-12)
            slack = cfg.tol_range * (1.0 / abs(eps) + abs(J))
            t = t_init
            accepted = None
            for k in range(cfg.max_backtracks):
                trial = _retract(v - q.scaled(t), R)
                step = v - trial
                step_h1 = float(np.sqrt(max(kernel_pairing_h1(step, step), 0.0)))
                if step_h1 < 1e-15 * (1.0 + v.h1()):
                    # retraction blocked the move entirely (boundary)
                    t *= cfg.backtrack
                    continue
                nxt = _probe(trial, eps, spec, ws, cfg, w0=cur.w)
                range_total += nxt.range_iterations
                dec = cfg.armijo_c * kernel_pairing_h1(q, step)
                if nxt.phi / eps <= J - dec + slack:
                    accepted = (trial, nxt, t, k)
                    break
                t *= cfg.backtrack
            if accepted is None:
                stalled = True
                break
            v, cur, t_used, backtracks = accepted
            history.append(cur.phi)
            t_init = 2.0 * t_used if backtracks == 0 else t_used

        vh1 = v.h1()
        on_boundary = vh1 >= R - cfg.margin
        if on_boundary and doublings < cfg.max_doublings and iters < cfg.max_iter:
            R *= 2.0
            doublings += 1
            converged = False
            continue
        break

    vh1 = v.h1()
    return ReducedState(
        v=v,
        phi_value=cur.phi,
        grad=cur.praw.scaled(eps),
        grad_h1_norm=abs(eps) * _dual_h1_norm(cur.praw),
        v_h1=vh1,
        interior=vh1 < R - cfg.margin,
        converged=converged,
        iterations=iters,
        range_iterations=range_total,
        r_ball=R,
        w=cur.w,
        phi_history=history,
    )


def directional_derivative(
    v, phi, eps, spec, ws=None, tol_range=1e-12, max_iter_range=200
):
    """DPhi(v)[phi] with the admissibility indicator of the direction.

    Returns (value, admissibility): value is the quadrature of
    eps * f(v + w(v)) * phi over the domain, admissibility is the H^1
    pairing <v, phi> used to decide whether a variation may be tested
    against a boundary minimizer.
    """
    if ws is None:
        ws = OperatorWorkspace()
    sol = solve_range(v, eps, spec, ws, tol=tol_range, max_iter=max_iter_range)
    u = GridField(ws.embed(v).values + ws.synthesize(sol.w).values)
    fg = evaluate_f(spec, u, eps)
    phig = phi.embed(ws.nt, ws.nx)
    value = eps * integrate(GridField(fg.values * phig.values))
    return value, kernel_pairing_h1(v, phi)
