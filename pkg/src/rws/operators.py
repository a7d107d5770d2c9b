"""The d'Alembert operator, its inverse on the range, and projections.

On the basis e^{i l t} sin(j x) the operator u_tt - u_xx is diagonal with
eigenvalues lambda[l, j] = j^2 - l^2.  Complete resonance means the kernel
is spanned by the modes j = |l|, l != 0 -- exactly the embeddings of
zero-mean torus profiles, v(t,x) = p(t+x) - p(t-x).  On the range
(j != |l|) the eigenvalues satisfy |lambda| >= 1, and

    cbar = max_{j != |l|} sqrt(1 + l^2 + j^2) / |j^2 - l^2|

is the H^1 operator bound of the inverse (attained at (l, j) = (0, 1),
value sqrt(2), at every truncation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, NotInRange, ZeroShift
from .fields import (
    DEFAULT_J,
    DEFAULT_L,
    DEFAULT_NT,
    DEFAULT_NX,
    GridField,
    KernelElement,
    SpectralField,
    TorusProfile,
    analyze,
    kernel_embed,
    synthesize,
    t_nodes,
    x_nodes,
)


@lru_cache(maxsize=32)
def eigen_table(L, J):
    """lambda[l, j] = j^2 - l^2 and the kernel mask j == |l|."""
    ll = np.arange(-L, L + 1)[:, None].astype(float)
    jj = np.arange(1, J + 1)[None, :].astype(float)
    lam = jj**2 - ll**2
    kernel = np.abs(np.abs(ll) - jj) < 0.5
    return lam, kernel


@dataclass
class OperatorWorkspace:
    """Truncation, working grid, eigenvalue table and the inverse bound."""

    L: int = DEFAULT_L
    J: int = DEFAULT_J
    nt: int = DEFAULT_NT
    nx: int = DEFAULT_NX
    lam: np.ndarray = field(init=False, repr=False)
    kernel_mask: np.ndarray = field(init=False, repr=False)
    cbar: float = field(init=False)

    def __post_init__(self):
        if self.L > self.nt // 2 - 1 or self.J > self.nx - 1:
            raise DimensionMismatch(
                f"grid ({self.nt}, {self.nx}) too coarse for "
                f"truncation ({self.L}, {self.J})"
            )
        self.lam, self.kernel_mask = eigen_table(self.L, self.J)
        ll = np.arange(-self.L, self.L + 1)[:, None].astype(float)
        jj = np.arange(1, self.J + 1)[None, :].astype(float)
        weight = np.sqrt(1.0 + ll**2 + jj**2)
        rng_mask = ~self.kernel_mask
        self.cbar = float(np.max(weight[rng_mask] / np.abs(self.lam[rng_mask])))

    def analyze(self, g):
        return analyze(g, self.L, self.J)

    def synthesize(self, s):
        return synthesize(s, self.nt, self.nx)

    def embed(self, v):
        return kernel_embed(v, self.nt, self.nx)

    @property
    def max_abs_lambda(self):
        return float(np.max(np.abs(self.lam)))


def dalembert_apply(s):
    """u |-> u_tt - u_xx, diagonal on the truncation."""
    lam, _ = eigen_table(s.L, s.J)
    return SpectralField(s.coeffs * lam, s.L, s.J)


def dalembert_inverse(s, tol_kernel=1e-12):
    """Inverse on the range; rejects fields with relative kernel energy
    above tol_kernel (the inverse does not exist there)."""
    lam, kernel = eigen_table(s.L, s.J)
    e_tot = float(np.sum(np.abs(s.coeffs) ** 2))
    e_ker = float(np.sum(np.abs(s.coeffs[kernel]) ** 2))
    if e_tot > 0.0 and e_ker > tol_kernel * e_tot:
        raise NotInRange(
            f"kernel energy fraction {e_ker / e_tot:.3e} exceeds {tol_kernel:.1e}"
        )
    out = np.zeros_like(s.coeffs)
    rng = ~kernel
    out[rng] = s.coeffs[rng] / lam[rng]
    return SpectralField(out, s.L, s.J)


def _to_spectral(f, L, J):
    if isinstance(f, SpectralField):
        return f
    return analyze(f, L, J)


def project_kernel(f, method="spectral", L=DEFAULT_L, J=DEFAULT_J):
    """Projection onto the kernel N, returned as a KernelElement.

    method="spectral": read off the modes j = |l| and map them to profile
    coefficients via u[m, |m|] = 2i sign(m) c_m.

    method="integral": the averaging formula

        p(y) = (1/2pi) int_0^pi [u(y - s, s) - u(y + s, s)] ds,

    evaluated with an exact FFT phase shift in t per column and the closed
    trapezoid in s, then the mean of p is dropped.  For band-limited input
    the s-integrand per time frequency reduces to cosines below 2*nx, so
    the trapezoid is exact and the two methods agree to round-off.
    """
    if method == "spectral":
        s = _to_spectral(f, L, J)
        M = min(s.L, s.J)
        c = np.zeros(2 * M + 1, dtype=complex)
        for m in range(1, M + 1):
            # u[m, |m|]: row index m + L, column |m| - 1
            up = s.coeffs[m + s.L, m - 1]
            um = s.coeffs[-m + s.L, m - 1]
            c[M + m] = -0.5j * up
            c[M - m] = 0.5j * um
        return KernelElement(TorusProfile(c))
    if method == "integral":
        if isinstance(f, SpectralField):
            g = synthesize(f, max(2 * f.L + 2, DEFAULT_NT), max(f.J + 1, DEFAULT_NX))
        else:
            g = f
        nt, nx = g.nt, g.nx
        Ft = np.fft.fft(g.values, axis=0) / nt        # (nt, nx+1)
        xs = x_nodes(nx)
        w = np.ones(nx + 1)
        w[0] = w[-1] = 0.5
        M = min(L, J, nt // 2 - 1)
        c = np.zeros(2 * M + 1, dtype=complex)
        dx = np.pi / nx
        for m in range(1, M + 1):
            kern = -2j * np.sin(m * xs) * w * dx
            c[M + m] = np.sum(Ft[m % nt] * kern) / (2.0 * np.pi)
            # -2i sin(-m s) = conj(-2i sin(m s)) for the negative frequency
            c[M - m] = np.sum(Ft[-m % nt] * np.conj(kern)) / (2.0 * np.pi)
        # reality clean-up (input is real so c[-m] == conj(c[m]) up to fft noise)
        c = 0.5 * (c + np.conj(c[::-1]))
        return KernelElement(TorusProfile(c))
    raise ValueError(f"unknown projection method {method!r}")


def project_range(f, L=DEFAULT_L, J=DEFAULT_J):
    """Projection onto N-perp: zero the resonant modes j = |l|."""
    s = _to_spectral(f, L, J)
    _, kernel = eigen_table(s.L, s.J)
    out = s.coeffs.copy()
    out[kernel] = 0.0
    return SpectralField(out, s.L, s.J)


def weak_residual(u, rhs, L=DEFAULT_L, J=DEFAULT_J):
    """|| Box u - rhs ||_{L^2} tested against the truncated basis.

    Both fields are analyzed on the shared truncation; the residual is the
    Parseval norm of lambda*u_hat - rhs_hat.
    """
    us = _to_spectral(u, L, J)
    rs = _to_spectral(rhs, L, J)
    us._check(rs)
    lam, _ = eigen_table(us.L, us.J)
    return float(
        np.sqrt(np.pi**2 * np.sum(np.abs(lam * us.coeffs - rs.coeffs) ** 2))
    )


def translate(g, shift):
    """T_h u(t, x) = u(t + h, x), h = shift * (2*pi/nt), shift integer != 0."""
    _check_shift(shift)
    return GridField(np.roll(g.values, -int(shift), axis=0))


def difference_quotient(g, shift):
    """D_h u = (u(t + h, x) - u(t, x)) / h on the periodic grid."""
    _check_shift(shift)
    h = 2.0 * np.pi * int(shift) / g.nt
    return GridField((np.roll(g.values, -int(shift), axis=0) - g.values) / h)


def _check_shift(shift):
    if int(shift) != shift or int(shift) == 0:
        raise ZeroShift(f"shift must be a nonzero integer, got {shift!r}")
