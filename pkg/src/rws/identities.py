"""Strip integrals, symmetry cancellations, cutoff variations, and the
elementary inequalities behind the coercivity estimates.

The strips are Omega_alpha = T x (alpha*pi, (1-alpha)*pi).  Two facts make
the grid versions of the cancellation identities exact rather than merely
quadrature-accurate:

* the map (t, x) -> (t + pi, pi - x) permutes the grid nodes, swaps t+x
  with t-x (mod 2*pi), flips kernel elements v -> -v, and preserves every
  symmetric strip -- so the `pari`-type integrals cancel node by node;
* for odd products of kernel elements the full-period t-sum annihilates
  every nonzero time frequency, and the surviving part is an odd function
  about x = pi/2 with even frequencies, which the symmetric closed
  trapezoid sums to zero exactly.

Strip boundaries are snapped *down* to the grid (the strip is widened,
never narrowed) so that the minimum over the snapped strip never exceeds
the true strip minimum and every lower bound verified here stays valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlphaOutOfRange,
    EvenCount,
    NegativeWeight,
    NonpositiveM,
    UnknownSymmetryClass,
)
from .fields import (
    DEFAULT_NT,
    DEFAULT_NX,
    GridField,
    KernelElement,
    TorusProfile,
    x_nodes,
)


def alpha_k(k):
    """Strip parameter of the coercivity estimate: 1/8 for k=1,
    1/(4(1+2k)) for k >= 2."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return 0.125 if k == 1 else 1.0 / (4.0 * (1 + 2 * k))


def snap_strip(alpha, nx):
    """Snap [alpha*pi, (1-alpha)*pi] down to grid columns.

    Returns (q_lo, q_hi, alpha_snapped) with alpha_snapped <= alpha.
    """
    if not 0.0 <= alpha < 0.5:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1/2); got {alpha}")
    q_lo = int(np.floor(alpha * nx + 1e-9))
    return q_lo, nx - q_lo, q_lo / nx


def strip_integral(a, alpha=0.0, path="direct"):
    """int_{Omega_alpha} a dt dx on the snapped strip.

    path="direct": full periodic t-sum times the closed x-trapezoid over
    the strip columns.

    path="rotated": the change of variables s+- = t +- x; the outer sum
    runs over s_+ on the time grid and each strip column is evaluated at
    t = s_+ - x_q through an exact FFT phase shift.  Agreement with the
    direct path validates the change of variables at grid level.
    """
    nt, nx = a.nt, a.nx
    q_lo, q_hi, _ = snap_strip(alpha, nx)
    w = np.zeros(nx + 1)
    w[q_lo : q_hi + 1] = 1.0
    w[q_lo] = w[q_hi] = 0.5
    if q_lo == q_hi:
        w[q_lo] = 0.0
    scale = (2.0 * np.pi / nt) * (np.pi / nx)
    if path == "direct":
        return float(scale * np.sum(a.values * w[None, :]))
    if path == "rotated":
        cols = np.arange(q_lo, q_hi + 1)
        F = np.fft.fft(a.values[:, cols], axis=0)
        freqs = np.fft.fftfreq(nt, d=1.0 / nt)
        phase = np.exp(-1j * np.outer(freqs, x_nodes(nx)[cols]))
        shifted = np.real(np.fft.ifft(F * phase, axis=0))
        return float(scale * np.sum(shifted * w[cols][None, :]))
    raise ValueError(f"unknown strip path {path!r}")


def odd_product_integral(elements, alpha=0.0, nt=DEFAULT_NT, nx=DEFAULT_NX):
    """int_{Omega_alpha} v_1 * ... * v_{2k+1} for kernel elements v_i.

    Vanishes identically for an odd number of factors (the even-frequency
    remainder after time averaging is odd about x = pi/2).
    """
    if len(elements) % 2 == 0:
        raise EvenCount(
            f"odd product identity needs an odd count, got {len(elements)}"
        )
    prod = np.ones((nt, nx + 1))
    for v in elements:
        prod *= v.embed(nt, nx).values
    return strip_integral(GridField(prod), alpha, "direct")


@dataclass
class SymmetricFunction:
    """a(x, u) with a declared parity class.

    class "i":  a(pi - x, u) = a(x, u)  and  a(x, -u) = a(x, u)
    class "ii": a(pi - x, u) = -a(x, u) and  a(x, -u) = -a(x, u)
    """

    fn: callable
    du: callable
    klass: str = "i"

    def __post_init__(self):
        if self.klass not in ("i", "ii"):
            raise UnknownSymmetryClass(
                f"symmetry class must be 'i' or 'ii', got {self.klass!r}"
            )


def symmetry_integral(
    a_spec,
    v,
    phi,
    derivative=False,
    phi2=None,
    alpha=0.0,
    nt=DEFAULT_NT,
    nx=DEFAULT_NX,
):
    """int_{Omega_alpha} a(x, v) phi      (derivative=False)
    or int_{Omega_alpha} (d_u a)(x, v) phi1 phi2  (derivative=True).

    Both vanish for v, phi in the kernel when a has a declared parity
    class; the cancellation is exact node by node under the grid
    symmetry (t, x) -> (t + pi, pi - x).
    """
    if a_spec.klass not in ("i", "ii"):
        raise UnknownSymmetryClass(f"unknown class {a_spec.klass!r}")
    xg = x_nodes(nx)[None, :]
    vg = v.embed(nt, nx).values
    pg = phi.embed(nt, nx).values
    if derivative:
        p2 = pg if phi2 is None else phi2.embed(nt, nx).values
        integrand = a_spec.du(xg, vg) * pg * p2
    else:
        integrand = a_spec.fn(xg, vg) * pg
    return strip_integral(GridField(integrand), alpha, "direct")


@dataclass
class CutoffVariation(KernelElement):
    """The admissible variation q_M(p) built from v's profile p.

    q_M clips at height M; the embedding is evaluated pointwise from the
    *same* profile evaluations as v itself, so v * phi >= 0 holds exactly
    on the grid.  ``profile`` holds the zero-mean band-limited reading of
    q_M(p) (for coefficient-space diagnostics), ``raw_profile`` keeps the
    uncentered one -- the mean cancels in the embedding either way.
    """

    base: TorusProfile = None
    threshold: float = 0.0
    raw_profile: TorusProfile = None

    def embed_parts(self, nt=DEFAULT_NT, nx=DEFAULT_NX):
        vplus, vminus = KernelElement(self.base).embed_parts(nt, nx)
        M = self.threshold
        return np.clip(vplus, -M, M), np.clip(vminus, -M, M)

    def embed(self, nt=DEFAULT_NT, nx=DEFAULT_NX):
        qp, qm = self.embed_parts(nt, nx)
        vals = qp - qm
        vals[:, 0] = 0.0
        vals[:, -1] = 0.0
        return GridField(vals)


def cutoff_variation(v, M, n_samples=1024, n_modes=256):
    """Clip v's profile at height M > 0 and return the kernel variation."""
    if M <= 0:
        raise NonpositiveM(f"cutoff threshold must be positive, got {M}")
    base = v.profile
    clipped = np.clip(base.samples(n_samples), -M, M)
    raw = TorusProfile.from_samples(clipped, M=n_modes, allow_mean=True)
    centered = raw.coeffs.copy()
    centered[raw.M] = 0.0
    return CutoffVariation(
        profile=TorusProfile(centered),
        base=base.copy(),
        threshold=float(M),
        raw_profile=raw,
    )


def elementary_inequalities(k, n_samples=10000, seed=0, box=10.0):
    """Worst margins of the power inequalities over random samples plus
    the known equality points.

    ovvia:        2^{2k-1}(a^{2k} + b^{2k}) - (a-b)^{2k} >= 0
    zialalletta:  (a-b)^{2k} - [a^{2k}+b^{2k}-2k(a^{2k-1}b+ab^{2k-1})] >= 0
                  (k >= 2 only)
    zialalletta3: (a+b)^{2k-1} - a^{2k-1} - 4^{1-k} b^{2k-1} >= 0  (b > 0)
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-box, box, n_samples)
    b = rng.uniform(-box, box, n_samples)
    # equality points: b = -a for ovvia, a = -b/2 for zialalletta3
    a = np.concatenate([a, [1.0, 2.0, -0.5]])
    b = np.concatenate([b, [-1.0, -2.0, 1.0]])
    report = {}
    m = 2.0 ** (2 * k - 1) * (a ** (2 * k) + b ** (2 * k)) - (a - b) ** (2 * k)
    report["ovvia"] = float(np.min(m))
    if k >= 2:
        m = (a - b) ** (2 * k) - (
            a ** (2 * k)
            + b ** (2 * k)
            - 2 * k * (a ** (2 * k - 1) * b + a * b ** (2 * k - 1))
        )
        report["zialalletta"] = float(np.min(m))
    bp = np.abs(b) + 1e-12
    m = (a + bp) ** (2 * k - 1) - a ** (2 * k - 1) - 4.0 ** (1 - k) * bp ** (
        2 * k - 1
    )
    report["zialalletta3"] = float(np.min(m))
    return report


def profile_power_integral(v, power, n=None):
    """int_0^{2pi} p(s)^power ds by the periodic trapezoid, sampled finely
    enough to be exact for the band-limited profile."""
    M = v.profile.M
    need = power * M + 2
    if n is None:
        n = max(256, int(2 ** np.ceil(np.log2(need))))
    s = v.profile.samples(n)
    return float(2.0 * np.pi * np.mean(s**power))


def l2k_strip_bounds(v, k, nt=DEFAULT_NT, nx=DEFAULT_NX):
    """Margins of the L^{2k} comparison between Omega, the strip
    Omega_{alpha_k}, and the profile:

        int_Omega v^{2k}            <= pi 4^k  int_T p^{2k}   (upper)
        int_{Omega_{alpha_k}} v^{2k} >= pi      int_T p^{2k}   (lower)
    """
    g = GridField(v.embed(nt, nx).values ** (2 * k))
    prof = profile_power_integral(v, 2 * k)
    full = strip_integral(g, 0.0, "direct")
    strip = strip_integral(g, alpha_k(k), "direct")
    return {
        "alpha": alpha_k(k),
        "full": full,
        "strip": strip,
        "profile_integral": prof,
        "upper_margin": np.pi * 4.0**k * prof - full,
        "lower_margin": strip - np.pi * prof,
    }


def coercivity_constant(B, k):
    """c_k(B) = 4^{-k} min over the closed snapped strip of B.

    B must be nonnegative (NegativeWeight otherwise).
    """
    scale = max(1.0, float(np.max(np.abs(B.values))))
    if float(np.min(B.values)) < -1e-10 * scale:
        raise NegativeWeight(f"weight attains {float(np.min(B.values)):.3e} < 0")
    q_lo, q_hi, _ = snap_strip(alpha_k(k), B.nx)
    m = float(np.min(B.values[:, q_lo : q_hi + 1]))
    return m / 4.0**k


def coercivity_gap(B, v, k):
    """int_Omega B v^{2k} - c_k(B) int_Omega v^{2k}  (nonnegative)."""
    vg = v.embed(B.nt, B.nx).values
    lhs = strip_integral(GridField(B.values * vg ** (2 * k)), 0.0, "direct")
    rhs = strip_integral(GridField(vg ** (2 * k)), 0.0, "direct")
    return lhs - coercivity_constant(B, k) * rhs
