"""Nonlinearity catalog and Nemitskii evaluation.

A ForcingSpec bundles the right-hand side f(t, x, u; eps), its
u-derivative, and the primitive F(t, x, u) = int_0^u f.  The catalog
factories validate the structural hypotheses each family needs:

* power_plus_forcing  -- f = beta * u^{2k} + h(t, x), h in the range of
  the wave operator;
* power_profile_forcing -- f = beta(x) * u^{2k} + R(t, x, u) + h(t, x)
  with beta symmetric about pi/2, one-signed, and R vanishing faster
  than u^{2k} at 0;
* monotone_forcing    -- f = ftilde(t, x, u) + a(x, u) with
  d_u ftilde >= beta_min > 0 and a in one of the two parity classes;
* custom_forcing      -- arbitrary closures (the primitive falls back to
  Gauss-Legendre quadrature in the u-slot).

All evaluators must be pure: the solver re-evaluates them freely and the
sweep runner calls them from worker threads.

``rescale_resonant`` performs the small-amplitude substitution
u = eps*(H + utilde) which turns the power families into a problem with
an eps-independent leading term: square utilde = et * fstar(utilde; et)
with et = eps^(2k) and fstar = beta*(H+u)^{2k} + Rstar, where
Rstar(t,x,u;et) = et^{-1} R(t,x, et^{1/2k}(H+u)) tends to zero with et.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    EvaluationDomain,
    NotInRangeSpace,
    SignMismatch,
)
from .fields import GridField, analyze, t_nodes, x_nodes
from .identities import SymmetricFunction
from .operators import project_kernel

GAUSS_NODES = 16


@dataclass
class ForcingSpec:
    """A forcing term and its calculus.

    The closures take (t, x, u, eps) as broadcastable arrays; eps enters
    only for rescaled problems.  ``bound_shape`` pins the evaluation grid
    when the closure captures grid data (h or H samples).
    """

    kind: str
    f: callable
    f_u: callable
    F: callable
    k: int = 0
    beta: object = None
    h: GridField = None
    remainder: callable = None
    remainder_u: callable = None
    a_term: SymmetricFunction = None
    bound_shape: tuple = None
    label: str = ""


def _grid_mesh(u):
    nt, nxp = u.values.shape
    return np.meshgrid(t_nodes(nt), x_nodes(nxp - 1), indexing="ij")


def evaluate_f(spec, u, eps=0.0):
    """Pointwise f(t, x, u(t,x); eps) on u's grid."""
    if spec.bound_shape is not None and u.values.shape != spec.bound_shape:
        raise DimensionMismatch(
            f"forcing is bound to grid {spec.bound_shape}, got {u.values.shape}"
        )
    tt, xx = _grid_mesh(u)
    vals = np.asarray(spec.f(tt, xx, u.values, eps), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationDomain("forcing evaluated to a non-finite value")
    return GridField(vals + np.zeros_like(u.values))


def evaluate_f_u(spec, u, eps=0.0):
    """Pointwise d_u f on u's grid."""
    if spec.bound_shape is not None and u.values.shape != spec.bound_shape:
        raise DimensionMismatch(
            f"forcing is bound to grid {spec.bound_shape}, got {u.values.shape}"
        )
    tt, xx = _grid_mesh(u)
    vals = np.asarray(spec.f_u(tt, xx, u.values, eps), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationDomain("forcing derivative evaluated to a non-finite value")
    return GridField(vals + np.zeros_like(u.values))


def evaluate_F(spec, u, eps=0.0):
    """Pointwise primitive F(t, x, u(t,x); eps) with F(.,0) = 0."""
    if spec.bound_shape is not None and u.values.shape != spec.bound_shape:
        raise DimensionMismatch(
            f"forcing is bound to grid {spec.bound_shape}, got {u.values.shape}"
        )
    tt, xx = _grid_mesh(u)
    vals = np.asarray(spec.F(tt, xx, u.values, eps), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationDomain("forcing primitive evaluated to a non-finite value")
    return GridField(vals + np.zeros_like(u.values))


def _gauss_primitive(f, nodes=GAUSS_NODES):
    """Primitive of f in the u-slot by Gauss-Legendre on [0, u].

    Exact for polynomial u-dependence up to degree 2*nodes - 1, and
    below 1e-10 for entire functions at moderate amplitudes.
    """
    y, w = np.polynomial.legendre.leggauss(nodes)
    gs = 0.5 * (y + 1.0)
    ws = 0.5 * w

    def F(tt, xx, uu, eps):
        acc = np.zeros_like(np.asarray(uu, dtype=float))
        for g, wgt in zip(gs, ws):
            acc = acc + wgt * f(tt, xx, uu * g, eps)
        return uu * acc

    return F


def _require_range_space(h, L, J):
    if L is None or J is None:
        from .fields import DEFAULT_J, DEFAULT_L

        # largest truncation h's grid can support, capped at the defaults
        L = L if L is not None else min(DEFAULT_L, h.nt // 2 - 1)
        J = J if J is not None else min(DEFAULT_J, h.nx - 1)
    s = analyze(h, L, J)
    kern = project_kernel(s)
    energy = kern.l2() ** 2
    if energy > 1e-10:
        raise NotInRangeSpace(
            f"forcing profile has kernel energy {energy:.3e} > 1e-10; "
            "resonant components make the problem unsolvable at this order"
        )


def power_plus_forcing(k, beta, h, L=None, J=None):
    """f(t, x, u) = beta * u^{2k} + h(t, x) with h in the range space."""
    if k < 1:
        raise ConfigError(f"power 2k needs k >= 1, got k={k}")
    _require_range_space(h, L, J)
    beta = float(beta)
    hv = h.values
    p = 2 * k

    def f(tt, xx, uu, eps):
        return beta * uu**p + hv

    def f_u(tt, xx, uu, eps):
        return p * beta * uu ** (p - 1)

    def F(tt, xx, uu, eps):
        return beta * uu ** (p + 1) / (p + 1) + hv * uu

    return ForcingSpec(
        kind="power_plus",
        f=f,
        f_u=f_u,
        F=F,
        k=k,
        beta=beta,
        h=h,
        bound_shape=hv.shape,
        label=f"beta*u^{p} + h",
    )


def _check_beta_profile(beta_profile, nx=256):
    x = x_nodes(nx)[1:-1]
    b = np.asarray(beta_profile(x), dtype=float) + np.zeros_like(x)
    flipped = np.asarray(beta_profile(np.pi - x), dtype=float) + np.zeros_like(x)
    scale = max(1.0, float(np.max(np.abs(b))))
    if np.max(np.abs(b - flipped)) > 1e-10 * scale:
        raise ConfigError("beta(x) must satisfy beta(pi - x) = beta(x)")
    if not (np.all(b > 0) or np.all(b < 0)):
        raise ConfigError("beta(x) must be strictly one-signed on (0, pi)")
    return float(np.sign(b[0]))


def _check_remainder_order(remainder, k, nt=16, nx=8):
    """Spot-check |R(., u)| = o(u^{2k}) on a log-spaced u-grid.

    Sampling cannot certify a little-o, so a violation only warns.
    """
    tt, xx = np.meshgrid(t_nodes(nt), x_nodes(nx), indexing="ij")
    us = 10.0 ** np.arange(-1, -6, -1)
    ratios = []
    for u0 in us:
        r = np.max(np.abs(remainder(tt, xx, np.full_like(tt, u0))))
        ratios.append(r / u0 ** (2 * k))
    if not ratios[-1] < 0.9 * ratios[0] + 1e-14:
        warnings.warn(
            "remainder does not appear to vanish faster than u^(2k) near 0; "
            f"sampled ratios {ratios[0]:.3e} -> {ratios[-1]:.3e}",
            stacklevel=3,
        )


def power_profile_forcing(
    k, beta_profile, remainder, remainder_u, h, L=None, J=None, remainder_F=None
):
    """f = beta(x) u^{2k} + R(t, x, u) + h(t, x).

    beta must be symmetric about pi/2 and one-signed; R and its
    u-derivative are closures R(t, x, u); R should vanish faster than
    u^{2k} at u = 0 (spot-checked with a warning).
    """
    if k < 1:
        raise ConfigError(f"power 2k needs k >= 1, got k={k}")
    _require_range_space(h, L, J)
    _check_beta_profile(beta_profile)
    _check_remainder_order(remainder, k)
    hv = h.values
    p = 2 * k

    def f(tt, xx, uu, eps):
        return beta_profile(xx) * uu**p + remainder(tt, xx, uu) + hv

    def f_u(tt, xx, uu, eps):
        return p * beta_profile(xx) * uu ** (p - 1) + remainder_u(tt, xx, uu)

    if remainder_F is None:
        RF = _gauss_primitive(lambda tt, xx, uu, eps: remainder(tt, xx, uu))
    else:
        RF = lambda tt, xx, uu, eps: remainder_F(tt, xx, uu)

    def F(tt, xx, uu, eps):
        return (
            beta_profile(xx) * uu ** (p + 1) / (p + 1)
            + RF(tt, xx, uu, eps)
            + hv * uu
        )

    return ForcingSpec(
        kind="power_profile",
        f=f,
        f_u=f_u,
        F=F,
        k=k,
        beta=beta_profile,
        h=h,
        remainder=remainder,
        remainder_u=remainder_u,
        bound_shape=hv.shape,
        label=f"beta(x)*u^{p} + R + h",
    )


def monotone_forcing(
    ftilde, ftilde_u, beta_min, a_term=None, u_box=3.0, F=None, nt=16, nx=8
):
    """f = ftilde(t, x, u) + a(x, u), d_u ftilde >= beta_min > 0.

    The monotonicity is sampled on the grid times a u-box; the parity of
    a is sampled against its declared class.
    """
    if beta_min <= 0:
        raise ConfigError(f"beta_min must be positive, got {beta_min}")
    tt, xx = np.meshgrid(t_nodes(nt), x_nodes(nx), indexing="ij")
    for u0 in np.linspace(-u_box, u_box, 33):
        m = float(np.min(ftilde_u(tt, xx, np.full_like(tt, u0))))
        if m < beta_min - 1e-12:
            raise ConfigError(
                f"d_u ftilde = {m:.3e} < beta_min = {beta_min} at u = {u0:.3f}"
            )
    if a_term is not None:
        _check_a_parity(a_term, u_box)

    def ffull(tt, xx, uu, eps):
        out = ftilde(tt, xx, uu)
        if a_term is not None:
            out = out + a_term.fn(xx, uu)
        return out

    def fu_full(tt, xx, uu, eps):
        out = ftilde_u(tt, xx, uu)
        if a_term is not None:
            out = out + a_term.du(xx, uu)
        return out

    Ffull = (
        _gauss_primitive(ffull)
        if F is None
        else (lambda tt, xx, uu, eps: F(tt, xx, uu))
    )
    return ForcingSpec(
        kind="monotone",
        f=ffull,
        f_u=fu_full,
        F=Ffull,
        a_term=a_term,
        label="ftilde + a",
    )


def _check_a_parity(a_term, u_box):
    rng = np.random.default_rng(0)
    x = rng.uniform(0.0, np.pi, 64)
    u = rng.uniform(-u_box, u_box, 64)
    s = 1.0 if a_term.klass == "i" else -1.0
    base = np.asarray(a_term.fn(x, u), dtype=float)
    scale = max(1.0, float(np.max(np.abs(base))))
    if np.max(np.abs(a_term.fn(x, -u) - s * base)) > 1e-10 * scale:
        raise ConfigError(f"a(x, -u) != {'+' if s > 0 else '-'}a(x, u) on samples")
    if np.max(np.abs(a_term.fn(np.pi - x, u) - s * base)) > 1e-10 * scale:
        raise ConfigError(
            f"a(pi - x, u) != {'+' if s > 0 else '-'}a(x, u) on samples"
        )


def custom_forcing(f, f_u, F=None, quad_nodes=GAUSS_NODES, label="custom"):
    """Arbitrary closures f(t, x, u, eps) and d_u f; the primitive is
    integrated numerically unless supplied.  Closures must be pure and
    may raise EvaluationDomain for out-of-domain arguments."""
    return ForcingSpec(
        kind="custom",
        f=f,
        f_u=f_u,
        F=F if F is not None else _gauss_primitive(f, quad_nodes),
        label=label,
    )


# --------------------------------------------------------------------------
# the small-amplitude rescaling


@dataclass
class RescaledProblem:
    """The problem after u = eps*(H + utilde).

    ``spec`` is the effective forcing in the normalized frame where
    beta*H > 0; ``sigma`` records the frame flip (eps, beta) ->
    (-eps, -beta) applied when the supplied pair had beta*H < 0 -- the
    flip leaves the equation and the back-map unchanged, it only selects
    the variational branch.  Drive the solver with
    ``eps_effective(eps)`` and map its solution back with ``back_map``.
    """

    original: ForcingSpec
    H: GridField
    k: int
    sigma: float
    spec: ForcingSpec

    def eps_tilde(self, eps):
        return float(eps) ** (2 * self.k)

    def eps_effective(self, eps):
        return self.sigma * self.eps_tilde(eps)

    def back_map(self, u_tilde, eps):
        if u_tilde.values.shape != self.H.values.shape:
            raise DimensionMismatch(
                f"solution grid {u_tilde.values.shape} does not match "
                f"H grid {self.H.values.shape}"
            )
        return GridField(float(eps) * (self.H.values + u_tilde.values))


def rescale_resonant(spec, H):
    """Build the rescaled problem for the power families.

    Requires beta(x) * H(t, x) to be one-signed on the interior grid
    (SignMismatch otherwise); a uniformly negative product is absorbed
    into a recorded frame flip.
    """
    if spec.kind not in ("power_plus", "power_profile"):
        raise ConfigError(
            f"rescaling applies to the power families, not {spec.kind!r}"
        )
    if H.values.shape != spec.h.values.shape:
        raise DimensionMismatch(
            f"H grid {H.values.shape} does not match forcing grid "
            f"{spec.h.values.shape}"
        )
    k = spec.k
    p = 2 * k
    Hv = H.values
    xs = x_nodes(H.nx)
    if callable(spec.beta):
        bx = np.asarray(spec.beta(xs), dtype=float) + np.zeros_like(xs)
    else:
        bx = np.full_like(xs, float(spec.beta))
    prod = bx[None, 1:-1] * Hv[:, 1:-1]
    lo, hi = float(np.min(prod)), float(np.max(prod))
    if lo <= 0.0 <= hi:
        raise SignMismatch(
            f"beta*H takes both signs on the interior grid "
            f"(min {lo:.3e}, max {hi:.3e}); rebuild H with the matching sign"
        )
    sigma = 1.0 if lo > 0.0 else -1.0

    R = spec.remainder
    R_u = spec.remainder_u

    def rstar(tt, xx, uu, et):
        if R is None or et == 0.0:
            return np.zeros_like(uu)
        if et < 0.0:
            raise EvaluationDomain(
                f"rescaled remainder needs eps_tilde >= 0, got {et:.3e}"
            )
        return R(tt, xx, et ** (1.0 / p) * (Hv + uu)) / et

    def rstar_u(tt, xx, uu, et):
        if R_u is None or et == 0.0:
            return np.zeros_like(uu)
        if et < 0.0:
            raise EvaluationDomain(
                f"rescaled remainder needs eps_tilde >= 0, got {et:.3e}"
            )
        return et ** (1.0 / p - 1.0) * R_u(tt, xx, et ** (1.0 / p) * (Hv + uu))

    # closures take the solver's (signed) effective eps; the remainder
    # itself is a function of eps_tilde = sigma * eps_eff >= 0
    def f(tt, xx, uu, eps_eff):
        et = sigma * eps_eff
        return sigma * (bx[None, :] * (Hv + uu) ** p + rstar(tt, xx, uu, et))

    def f_u(tt, xx, uu, eps_eff):
        et = sigma * eps_eff
        return sigma * (
            p * bx[None, :] * (Hv + uu) ** (p - 1) + rstar_u(tt, xx, uu, et)
        )

    rstar_F = _gauss_primitive(rstar)

    def F(tt, xx, uu, eps_eff):
        et = sigma * eps_eff
        lead = bx[None, :] * ((Hv + uu) ** (p + 1) - Hv ** (p + 1)) / (p + 1)
        if R is None:
            return sigma * lead
        return sigma * (lead + rstar_F(tt, xx, uu, et))

    eff = ForcingSpec(
        kind="rescaled",
        f=f,
        f_u=f_u,
        F=F,
        k=k,
        beta=spec.beta,
        bound_shape=Hv.shape,
        label=f"{spec.label} (rescaled)",
    )
    return RescaledProblem(original=spec, H=H, k=k, sigma=sigma, spec=eff)


# --------------------------------------------------------------------------
# contraction constants of the range equation


def contraction_constants(spec, R_ball, ws, n_u=64):
    """(C0, eps0) of the fixed-point estimate.

    C0 = 1 + sqrt(2)*pi*cbar * max(|f| + |f_u|) with the max sampled over
    the workspace grid, |u| <= 3*R_ball + 1, and eps in {-1, 1}; eps0 =
    1/(2*C0).  Sampling makes eps0 an estimate -- callers treat it as
    advisory.
    """
    if R_ball <= 0:
        raise ConfigError(f"R_ball must be positive, got {R_ball}")
    tt, xx = np.meshgrid(t_nodes(ws.nt), x_nodes(ws.nx), indexing="ij")
    worst = 0.0
    sampled = False
    for eps in (-1.0, 1.0):
        try:
            for u0 in np.linspace(-(3 * R_ball + 1), 3 * R_ball + 1, n_u):
                uu = np.full_like(tt, u0)
                val = np.abs(spec.f(tt, xx, uu, eps)) + np.abs(
                    spec.f_u(tt, xx, uu, eps)
                )
                worst = max(worst, float(np.max(val)))
        except EvaluationDomain:
            # one-sided specs (rescaled remainders) admit a single sign
            continue
        sampled = True
    if not sampled:
        raise EvaluationDomain("spec rejects eps = -1 and eps = +1 alike")
    C0 = 1.0 + np.sqrt(2.0) * np.pi * ws.cbar * worst
    return C0, 1.0 / (2.0 * C0)
