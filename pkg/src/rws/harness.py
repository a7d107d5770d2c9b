"""Experiment orchestration: configs, single solves, sweeps, verification.

A run is described by an INI file (sections grid / spectral / forcing /
solver / epsilon / output / run), executed by one of

    run_solve(cfg, eps)   one solve, returns a SolveReport
    run_sweep(cfg)        a family of solves over the epsilon schedule,
                          with log-log slope fits of the solution norms
    run_verify(cfg)       the invariant suite as a pass/fail table
    run_build_h(cfg)      just the positive-H construction for cfg's h

Every run persists a self-contained directory

    <outdir>/<run-id>/{config.copy, report.json, u.csv, v.csv, w.csv,
                       H.csv, sweep.csv}

(the subset that applies to the run kind).  Field CSVs are written with
17 significant digits so a reload reproduces the stored diagnostics
bit-for-bit.  The RWS_OUT environment variable overrides the configured
output directory.  All randomness (multi-start initials, verification
samples) derives from the master seed in the config.

For the power-law forcings (kinds ``theorem1`` and ``theorem2``) a solve
builds the positive profile H from h, rescales u = eps*(H + utilde), and
drives the inner solver at eps_tilde = eps^(2k); for ``theorem3`` and the
custom kinds the solver runs directly at eps.
"""

from __future__ import annotations

import configparser
import json
import os
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import (
    ConfigError,
    GridTooLarge,
    MaxIterations,
    NotInRangeSpace,
    RwsError,
)
from .fields import (
    GridField,
    KernelElement,
    TorusProfile,
    integrate,
    kernel_pairing,
    norm,
    spectral_l2,
    spectral_h1,
    t_nodes,
    x_nodes,
)
from .forcing import (
    contraction_constants,
    custom_forcing,
    evaluate_F,
    evaluate_f,
    monotone_forcing,
    power_plus_forcing,
    power_profile_forcing,
    rescale_resonant,
)
from .hbuilder import build_H
from .identities import (
    SymmetricFunction,
    coercivity_constant,
    coercivity_gap,
    elementary_inequalities,
    l2k_strip_bounds,
    odd_product_integral,
)
from .operators import (
    OperatorWorkspace,
    dalembert_apply,
    dalembert_inverse,
    eigen_table,
    project_kernel,
    project_range,
    weak_residual,
)
from .range_solver import solve_range
from .reducer import (
    MinimizeConfig,
    minimize_in_ball,
    reduced_functional,
    reduced_gradient,
)

FORCING_KINDS = ("theorem1", "theorem2", "theorem3", "cubic_drive")


# ------------------------------------------------------------ configuration


@dataclass
class RunConfig:
    """All knobs of a run; mirrors the INI sections field by field."""

    nt: int = 128
    nx: int = 64
    L: int = 32
    J: int = 32
    kind: str = "theorem1"
    k: int = 1
    beta: float = 1.0
    h_name: str = "sinx"
    beta_profile: str = "sinx"
    remainder: str = "cubic"
    beta_min: float = 1.0
    R_ball: float = 5.0
    tol_range: float = 1e-12
    max_iter_range: int = 200
    tol_grad: float = 1e-8
    max_iter_min: int = 500
    n_restarts: int = 0
    margin: float = 1e-3
    eps_values: tuple = (1e-2,)
    allow_zero: bool = False
    out_dir: str = "runs"
    formats: tuple = ("csv", "json")
    seed: int = 0
    workers: int = 0
    source_path: str = None

    def __post_init__(self):
        for name in ("nt", "nx", "L", "J", "k", "max_iter_range",
                     "max_iter_min"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive count")
        if self.n_restarts < 0 or self.workers < 0:
            raise ConfigError("n_restarts and workers cannot be negative")
        if self.kind not in FORCING_KINDS:
            raise ConfigError(
                f"forcing kind {self.kind!r} is not one of {FORCING_KINDS}"
            )
        if self.R_ball <= 0 or self.tol_range <= 0 or self.tol_grad <= 0:
            raise ConfigError("R_ball and tolerances must be positive")
        if len(self.eps_values) == 0:
            raise ConfigError("epsilon schedule is empty")
        if not self.allow_zero and any(e == 0.0 for e in self.eps_values):
            raise ConfigError(
                "epsilon = 0 is a zero-control run; set allow_zero = true"
            )

    @classmethod
    def from_ini(cls, path):
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path!r}")
        known = {
            "grid": {"nt", "nx"},
            "spectral": {"l", "j"},
            "forcing": {"kind", "k", "beta", "h", "beta_profile",
                        "remainder", "beta_min"},
            "solver": {"r_ball", "tol_range", "max_iter_range", "tol_grad",
                       "max_iter_min", "n_restarts", "margin"},
            "epsilon": {"list", "geometric_start", "geometric_stop",
                        "geometric_count", "allow_zero"},
            "output": {"directory", "formats"},
            "run": {"seed", "workers"},
        }
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"unknown config section [{section}]")
            for key in parser[section]:
                if key not in known[section]:
                    raise ConfigError(
                        f"unknown key {key!r} in section [{section}]"
                    )
        kw = {"source_path": str(path)}

        def take(section, key, attr, conv):
            if parser.has_option(section, key):
                try:
                    kw[attr] = conv(parser.get(section, key))
                except ValueError as exc:
                    raise ConfigError(
                        f"bad value for {section}.{key}: {exc}"
                    ) from None

        take("grid", "nt", "nt", int)
        take("grid", "nx", "nx", int)
        take("spectral", "L", "L", int)
        take("spectral", "J", "J", int)
        take("forcing", "kind", "kind", str)
        take("forcing", "k", "k", int)
        take("forcing", "beta", "beta", float)
        take("forcing", "h", "h_name", str)
        take("forcing", "beta_profile", "beta_profile", str)
        take("forcing", "remainder", "remainder", str)
        take("forcing", "beta_min", "beta_min", float)
        take("solver", "R_ball", "R_ball", float)
        take("solver", "tol_range", "tol_range", float)
        take("solver", "max_iter_range", "max_iter_range", int)
        take("solver", "tol_grad", "tol_grad", float)
        take("solver", "max_iter_min", "max_iter_min", int)
        take("solver", "n_restarts", "n_restarts", int)
        take("solver", "margin", "margin", float)
        take("output", "directory", "out_dir", str)
        take(
            "output", "formats", "formats",
            lambda s: tuple(p.strip() for p in s.split(",") if p.strip()),
        )
        take("run", "seed", "seed", int)
        take("run", "workers", "workers", int)
        if parser.has_option("epsilon", "allow_zero"):
            kw["allow_zero"] = parser.getboolean("epsilon", "allow_zero")
        if parser.has_option("epsilon", "list"):
            vals = [
                float(p)
                for p in parser.get("epsilon", "list").split(",")
                if p.strip()
            ]
            kw["eps_values"] = tuple(vals)
        elif parser.has_option("epsilon", "geometric_start"):
            try:
                start = parser.getfloat("epsilon", "geometric_start")
                stop = parser.getfloat("epsilon", "geometric_stop")
                count = parser.getint("epsilon", "geometric_count")
            except (configparser.NoOptionError, ValueError) as exc:
                raise ConfigError(f"bad geometric epsilon schedule: {exc}")
            if count < 1 or start == 0.0 or stop == 0.0:
                raise ConfigError("geometric schedule needs nonzero endpoints")
            kw["eps_values"] = tuple(np.geomspace(start, stop, count))
        return cls(**kw)

    def to_ini_text(self):
        lines = [
            "[grid]", f"nt = {self.nt}", f"nx = {self.nx}", "",
            "[spectral]", f"L = {self.L}", f"J = {self.J}", "",
            "[forcing]", f"kind = {self.kind}", f"k = {self.k}",
            f"beta = {self.beta!r}", f"h = {self.h_name}",
            f"beta_profile = {self.beta_profile}",
            f"remainder = {self.remainder}", f"beta_min = {self.beta_min!r}",
            "",
            "[solver]", f"R_ball = {self.R_ball!r}",
            f"tol_range = {self.tol_range!r}",
            f"max_iter_range = {self.max_iter_range}",
            f"tol_grad = {self.tol_grad!r}",
            f"max_iter_min = {self.max_iter_min}",
            f"n_restarts = {self.n_restarts}", f"margin = {self.margin!r}",
            "",
            "[epsilon]",
            "list = " + ", ".join(repr(float(e)) for e in self.eps_values),
            f"allow_zero = {str(self.allow_zero).lower()}", "",
            "[output]", f"directory = {self.out_dir}",
            "formats = " + ",".join(self.formats), "",
            "[run]", f"seed = {self.seed}", f"workers = {self.workers}", "",
        ]
        return "\n".join(lines)


# ------------------------------------------------------- forcing assembly


def catalog_field(name, nt, nx):
    """A named grid field (or a CSV dump with matching shape)."""
    x = x_nodes(nx)[None, :]
    ones_t = np.ones((nt, 1))
    if name == "one":
        return GridField(np.ones((nt, nx + 1)))
    if name == "sinx":
        return GridField(np.sin(x) * ones_t)
    if name == "sin2x":
        return GridField(np.sin(2 * x) * ones_t)
    if name.endswith(".csv"):
        vals = np.loadtxt(name, delimiter=",")
        if vals.shape != (nt, nx + 1):
            raise ConfigError(
                f"field file {name!r} has shape {vals.shape}, "
                f"expected {(nt, nx + 1)}"
            )
        return GridField(vals)
    raise ConfigError(f"unknown field {name!r} (try one|sinx|sin2x|*.csv)")


def _beta_profile_fn(name):
    if name == "sinx":
        return lambda xx: np.sin(xx)
    if name == "one":
        return lambda xx: np.ones_like(np.asarray(xx, dtype=float))
    raise ConfigError(f"unknown beta profile {name!r} (try sinx|one)")


def _remainder_triplet(name):
    if name == "cubic":
        return (
            lambda tt, xx, uu: uu**3,
            lambda tt, xx, uu: 3.0 * uu**2,
            lambda tt, xx, uu: uu**4 / 4.0,
        )
    if name == "none":
        zero = lambda tt, xx, uu: np.zeros_like(uu)
        return zero, zero, zero
    raise ConfigError(f"unknown remainder {name!r} (try cubic|none)")


def build_forcing(cfg):
    """The ForcingSpec described by cfg (before any rescaling)."""
    if cfg.kind == "theorem1":
        h = catalog_field(cfg.h_name, cfg.nt, cfg.nx)
        return power_plus_forcing(cfg.k, cfg.beta, h, L=cfg.L, J=cfg.J)
    if cfg.kind == "theorem2":
        h = catalog_field(cfg.h_name, cfg.nt, cfg.nx)
        R, R_u, R_F = _remainder_triplet(cfg.remainder)
        return power_profile_forcing(
            cfg.k, _beta_profile_fn(cfg.beta_profile), R, R_u, h,
            L=cfg.L, J=cfg.J, remainder_F=R_F,
        )
    if cfg.kind == "theorem3":
        a = SymmetricFunction(
            fn=lambda xx, uu: uu**2, du=lambda xx, uu: 2.0 * uu, klass="i"
        )
        return monotone_forcing(
            ftilde=lambda tt, xx, uu: uu + uu**3,
            ftilde_u=lambda tt, xx, uu: 1.0 + 3.0 * uu**2,
            beta_min=cfg.beta_min,
            a_term=a,
            F=lambda tt, xx, uu: uu**2 / 2.0 + uu**4 / 4.0 + uu**3 / 3.0,
        )
    if cfg.kind == "cubic_drive":
        return custom_forcing(
            f=lambda tt, xx, uu, eps: uu**3 + np.sin(tt) * np.sin(xx),
            f_u=lambda tt, xx, uu, eps: 3.0 * uu**2,
            F=lambda tt, xx, uu, eps: uu**4 / 4.0
            + np.sin(tt) * np.sin(xx) * uu,
            label="u^3 + sin t sin x",
        )
    raise ConfigError(f"unknown forcing kind {cfg.kind!r}")


# ------------------------------------------------------------- persistence


def _out_root(cfg):
    return os.environ.get("RWS_OUT") or cfg.out_dir


def _run_dir(cfg, run_id):
    path = os.path.join(_out_root(cfg), run_id)
    os.makedirs(path, exist_ok=True)
    return path


def save_field(path, g):
    np.savetxt(path, g.values, delimiter=",", fmt="%.17e")


def load_field(path):
    return GridField(np.loadtxt(path, delimiter=","))


def _copy_config(cfg, run_dir):
    dst = os.path.join(run_dir, "config.copy")
    if cfg.source_path and os.path.exists(cfg.source_path):
        shutil.copyfile(cfg.source_path, dst)
    else:
        with open(dst, "w") as fh:
            fh.write(cfg.to_ini_text())


def _plain(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def _write_json(run_dir, name, payload):
    with open(os.path.join(run_dir, name), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_plain)
        fh.write("\n")


# -------------------------------------------------------------- the solves


@dataclass
class SolveReport:
    """Diagnostics of one converged solve, as persisted to report.json."""

    epsilon: float
    kind: str
    phi_value: float
    v_h1: float
    v_linf: float
    w_l2: float
    u_norms: dict
    weak_residual: float
    iterations: dict
    interior: bool
    beyond_paper_bound: bool
    distinct_minima: int
    wall_time: float
    eps_inner: float
    converged: bool
    grad_h1_norm: float
    r_ball: float
    run_dir: str = None
    fields: dict = field(default_factory=dict, repr=False)

    def as_dict(self):
        d = asdict(self)
        d.pop("fields")
        return d


def _u_norm_table(u):
    """L2 / H1 / Linf / E-proxy of a grid field.

    The E-proxy is the H1 norm plus the sup norm plus the grid-pair
    Holder-1/2 seminorm; when the grid exceeds the pair-scan cap the
    seminorm term is dropped (leaving H1 + Linf).
    """
    table = {
        "L2": norm(u, "L2"),
        "H1": norm(u, "H1"),
        "Linf": norm(u, "Linf"),
    }
    try:
        table["E_proxy"] = table["H1"] + norm(u, "Holder12")
    except GridTooLarge:
        table["E_proxy"] = table["H1"] + table["Linf"]
    return table


def _kernel_start(rng, r_ball, n_modes=6):
    """A random kernel element well inside the ball, for multi-starts."""
    decay = 1.0 + np.arange(1, n_modes + 1) ** 2
    c = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes))
    v = KernelElement(TorusProfile.from_coefficients(c / decay))
    h = v.h1()
    return v.scaled(0.3 * r_ball / h) if h > 0 else v


def _count_distinct(states, tol=0.25):
    reps = []
    for st in states:
        if all((st.v - r.v).l2() > tol for r in reps):
            reps.append(st)
    return len(reps)


def _zero_report(cfg, run_dir):
    z = GridField(np.zeros((cfg.nt, cfg.nx + 1)))
    return SolveReport(
        epsilon=0.0, kind=cfg.kind, phi_value=0.0, v_h1=0.0, v_linf=0.0,
        w_l2=0.0, u_norms={"L2": 0.0, "H1": 0.0, "Linf": 0.0, "E_proxy": 0.0},
        weak_residual=0.0,
        iterations={"range_total": 0, "minimizer": 0},
        interior=True, beyond_paper_bound=False, distinct_minima=1,
        wall_time=0.0, eps_inner=0.0, converged=True, grad_h1_norm=0.0,
        r_ball=cfg.R_ball, run_dir=run_dir,
        fields={"u": z, "v": z, "w": z},
    )


def run_solve(cfg, eps, persist=True, run_id=None):
    """One solve at the given eps; returns the SolveReport.

    Raises MaxIterations when no start of the minimizer converges, and
    propagates construction errors (bad h, sign mismatches, ...).
    """
    eps = float(eps)
    started = time.perf_counter()
    run_id = run_id or f"solve-{cfg.kind}-eps{eps:.6e}"
    run_dir = _run_dir(cfg, run_id) if persist else None

    if eps == 0.0:
        report = _zero_report(cfg, run_dir)
        if persist:
            _persist_solve(cfg, report)
        return report

    ws = OperatorWorkspace(cfg.L, cfg.J, cfg.nt, cfg.nx)
    spec0 = build_forcing(cfg)
    rescaled = None
    if cfg.kind in ("theorem1", "theorem2"):
        hres = build_H(spec0.h, L=cfg.L, J=cfg.J)
        rescaled = rescale_resonant(spec0, hres.H)
        inner_spec = rescaled.spec
        eps_inner = rescaled.eps_effective(eps)
    else:
        inner_spec = spec0
        eps_inner = eps

    mcfg = MinimizeConfig(
        tol_grad=cfg.tol_grad,
        max_iter=cfg.max_iter_min,
        tol_range=cfg.tol_range,
        max_iter_range=cfg.max_iter_range,
        margin=cfg.margin,
    )
    starts = [None]
    for i in range(cfg.n_restarts):
        rng = np.random.default_rng([cfg.seed, i + 1])
        starts.append(_kernel_start(rng, cfg.R_ball))
    states = [
        minimize_in_ball(cfg.R_ball, eps_inner, inner_spec, init=s,
                         cfg=mcfg, ws=ws)
        for s in starts
    ]
    converged = [st for st in states if st.converged]
    if not converged:
        raise MaxIterations(
            f"no start converged within {cfg.max_iter_min} iterations "
            f"(best gradient {min(s.grad_h1_norm for s in states):.3e})"
        )
    best = min(converged, key=lambda st: st.phi_value / eps_inner)

    u_tilde = GridField(
        ws.embed(best.v).values + ws.synthesize(best.w).values
    )
    if rescaled is not None:
        u = rescaled.back_map(u_tilde, eps)
    else:
        u = u_tilde
    rhs = GridField(eps * evaluate_f(spec0, u, eps).values)
    residual = weak_residual(u, rhs, L=cfg.L, J=cfg.J)

    _, eps0 = contraction_constants(inner_spec, cfg.R_ball, ws)

    report = SolveReport(
        epsilon=eps,
        kind=cfg.kind,
        phi_value=float(best.phi_value),
        v_h1=float(best.v_h1),
        v_linf=float(norm(best.v, "Linf")),
        w_l2=float(spectral_l2(best.w)),
        u_norms=_u_norm_table(u),
        weak_residual=float(residual),
        iterations={
            "range_total": int(best.range_iterations),
            "minimizer": int(best.iterations),
        },
        interior=bool(best.interior),
        beyond_paper_bound=bool(abs(eps_inner) > eps0),
        distinct_minima=_count_distinct(converged),
        wall_time=time.perf_counter() - started,
        eps_inner=float(eps_inner),
        converged=True,
        grad_h1_norm=float(best.grad_h1_norm),
        r_ball=float(best.r_ball),
        run_dir=run_dir,
        fields={
            "u": u,
            "v": ws.embed(best.v),
            "w": ws.synthesize(best.w),
        },
    )
    if rescaled is not None:
        report.fields["H"] = rescaled.H
    if persist:
        _persist_solve(cfg, report)
    return report


def _persist_solve(cfg, report):
    run_dir = report.run_dir
    _copy_config(cfg, run_dir)
    if "json" in cfg.formats:
        _write_json(run_dir, "report.json", report.as_dict())
    if "csv" in cfg.formats:
        for name, g in report.fields.items():
            save_field(os.path.join(run_dir, f"{name}.csv"), g)


# --------------------------------------------------------------- the sweep

SWEEP_COLUMNS = (
    "epsilon", "eps_inner", "phi_value", "v_h1", "v_linf", "w_l2",
    "u_L2", "u_H1", "u_Linf", "u_E_proxy", "weak_residual",
    "range_iterations", "minimizer_iterations", "interior",
    "beyond_paper_bound", "distinct_minima",
)


@dataclass
class SweepResult:
    reports: list
    slope_u: float
    slope_w: float
    run_dir: str


def _sweep_row(r):
    return (
        r.epsilon, r.eps_inner, r.phi_value, r.v_h1, r.v_linf, r.w_l2,
        r.u_norms["L2"], r.u_norms["H1"], r.u_norms["Linf"],
        r.u_norms["E_proxy"], r.weak_residual,
        r.iterations["range_total"], r.iterations["minimizer"],
        int(r.interior), int(r.beyond_paper_bound), r.distinct_minima,
    )


def _write_sweep_csv(run_dir, reports):
    path = os.path.join(run_dir, "sweep.csv")
    with open(path, "w") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for r in reports:
            cells = [
                f"{c:.17e}" if isinstance(c, float) else str(c)
                for c in _sweep_row(r)
            ]
            fh.write(",".join(cells) + "\n")
    return path


def run_sweep(cfg):
    """Solve at every eps of the schedule and fit the scaling slopes.

    The u-slope is d log||u||_Linf / d log|eps|; the w-slope is measured
    against the eps the inner solver actually saw (eps^{2k} for the
    rescaled kinds).  On a point failure the completed rows are still
    written to sweep.csv before the error propagates.
    """
    eps = list(cfg.eps_values)
    if len(eps) < 4:
        raise ConfigError(f"a sweep needs >= 4 epsilon values, got {len(eps)}")
    mags = [abs(e) for e in eps]
    if max(mags) < 100.0 * min(mags):
        raise ConfigError("a sweep must span at least two decades of epsilon")
    run_dir = _run_dir(cfg, f"sweep-{cfg.kind}")
    _copy_config(cfg, run_dir)

    workers = cfg.workers or os.cpu_count() or 1
    results = [None] * len(eps)
    errors = []

    def point(i):
        return i, run_solve(cfg, eps[i], persist=False)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(point, i) for i in range(len(eps))]:
            try:
                i, rep = fut.result()
                results[i] = rep
            except RwsError as exc:
                errors.append(exc)
    done = [r for r in results if r is not None]
    _write_sweep_csv(run_dir, done)
    if errors:
        _write_json(
            run_dir, "report.json",
            {"error": type(errors[0]).__name__, "message": str(errors[0]),
             "completed": len(done), "requested": len(eps)},
        )
        raise errors[0]

    le = np.log([abs(r.epsilon) for r in results])
    slope_u = float(np.polyfit(le, np.log([r.u_norms["Linf"] for r in results]), 1)[0])
    li = np.log([abs(r.eps_inner) for r in results])
    slope_w = float(np.polyfit(li, np.log([r.w_l2 for r in results]), 1)[0])
    _write_json(
        run_dir, "report.json",
        {
            "slope_u_linf_vs_eps": slope_u,
            "slope_w_l2_vs_eps_inner": slope_w,
            "points": [r.as_dict() for r in results],
        },
    )
    return SweepResult(
        reports=results, slope_u=slope_u, slope_w=slope_w, run_dir=run_dir
    )


# ------------------------------------------------------------------ build-h


def run_build_h(cfg):
    """Build H for cfg's h and persist the diagnostics."""
    h = catalog_field(cfg.h_name, cfg.nt, cfg.nx)
    res = build_H(h, L=cfg.L, J=cfg.J)
    run_dir = _run_dir(cfg, f"buildh-{os.path.basename(cfg.h_name)}")
    _copy_config(cfg, run_dir)
    if "csv" in cfg.formats:
        save_field(os.path.join(run_dir, "H.csv"), res.H)
    if "json" in cfg.formats:
        _write_json(
            run_dir, "report.json",
            {
                "kappa": res.kappa,
                "c_value": res.c_value,
                "boundary_max": res.boundary_max,
                "interior_min": res.interior_min,
                "weak_residual": res.weak_residual,
            },
        )
    return res, run_dir


# ------------------------------------------------------------ verification


@dataclass
class VerifyRow:
    identity: str
    samples: int
    worst_margin: float
    tolerance: float
    status: str  # "pass" | "FAIL" | "skip"
    note: str = ""


def _random_kernel(rng, n_modes=5, scale=1.0):
    c = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes))
    c /= 1.0 + np.arange(1, n_modes + 1) ** 2
    return KernelElement(TorusProfile.from_coefficients(scale * c))


def _action_value(u, eps, spec, ws):
    lam, _ = eigen_table(ws.L, ws.J)
    s = ws.analyze(u)
    quad = -0.5 * np.pi**2 * float(np.sum(lam * np.abs(s.coeffs) ** 2))
    return quad + eps * integrate(evaluate_F(spec, u, eps))


def _checks_operators(cfg, rng):
    ws = OperatorWorkspace(16, 16, 64, 32)
    worst = 0.0
    for _ in range(100):
        g = ws.analyze(GridField(rng.standard_normal((ws.nt, ws.nx + 1))))
        g = project_range(g, L=ws.L, J=ws.J)
        back = dalembert_apply(dalembert_inverse(g))
        worst = max(worst, spectral_l2(back - g))
    yield VerifyRow("box_inverse_roundtrip", 100, worst, 1e-12,
                    "pass" if worst <= 1e-12 else "FAIL")

    worst = 0.0
    for _ in range(20):
        g = GridField(rng.standard_normal((64, 33)))
        a = project_kernel(g, method="spectral", L=16, J=16)
        b = project_kernel(g, method="integral", L=16, J=16)
        worst = max(worst, (a - b).l2())
    yield VerifyRow("kernel_projector_formulas", 20, worst, 1e-8,
                    "pass" if worst <= 1e-8 else "FAIL")

    margin = np.inf
    for _ in range(50):
        g = project_range(
            ws.analyze(GridField(rng.standard_normal((ws.nt, ws.nx + 1)))),
            L=ws.L, J=ws.J,
        )
        margin = min(
            margin,
            ws.cbar * spectral_l2(g) - spectral_h1(dalembert_inverse(g)),
        )
    yield VerifyRow("inverse_h1_bound", 50, margin, 1e-12,
                    "pass" if margin >= -1e-12 else "FAIL")


def _checks_identities(cfg, rng):
    worst = 0.0
    for _ in range(20):
        els = [_random_kernel(rng) for _ in range(rng.integers(1, 3) * 2 - 1)]
        worst = max(worst, abs(odd_product_integral(els, nt=64, nx=32)))
    yield VerifyRow("odd_kernel_products", 20, worst, 1e-10,
                    "pass" if worst <= 1e-10 else "FAIL")

    for k in (1, 2):
        rep = elementary_inequalities(k, n_samples=10000, seed=cfg.seed)
        margin = min(rep.values())
        yield VerifyRow(f"power_inequalities_k{k}", 10000, margin, 1e-10,
                        "pass" if margin >= -1e-10 else "FAIL")

    for k in (1, 2):
        margin = np.inf
        for _ in range(10):
            b = l2k_strip_bounds(_random_kernel(rng), k, nt=64, nx=32)
            margin = min(margin, b["upper_margin"], b["lower_margin"])
        yield VerifyRow(f"strip_power_bounds_k{k}", 10, margin, 1e-6,
                        "pass" if margin >= -1e-6 else "FAIL")

    x = x_nodes(32)[None, :]
    margin = np.inf
    for _ in range(50):
        amp = rng.uniform(0.1, 2.0)
        B = GridField(
            amp + np.abs(rng.standard_normal()) * np.sin(x) ** 2
            * np.ones((64, 1))
        )
        k = int(rng.integers(1, 3))
        margin = min(margin, coercivity_gap(B, _random_kernel(rng), k))
    yield VerifyRow("coercivity_gap", 50, margin, 1e-8,
                    "pass" if margin >= -1e-8 else "FAIL")

    B = GridField(x * (np.pi - x) / 2 * np.ones((64, 1)))
    err = abs(coercivity_constant(B, 1) - 7.0 * np.pi**2 / 512.0)
    yield VerifyRow("coercivity_parabola", 1, err, 1e-10,
                    "pass" if err <= 1e-10 else "FAIL")

    worst = 0.0
    for _ in range(20):
        v = _random_kernel(rng)
        g = v.embed(64, 32)
        quad = integrate(GridField(g.values**2))
        exact = 2.0 * np.pi * v.profile.l2() ** 2
        worst = max(worst, abs(quad - exact) / (1.0 + exact))
    yield VerifyRow("profile_isometry", 20, worst, 1e-6,
                    "pass" if worst <= 1e-6 else "FAIL")

    # Holder-1/2 embedding check; skipped when the grid exceeds the
    # pair-scan cap of the seminorm
    try:
        margin = np.inf
        for _ in range(10):
            v = _random_kernel(rng)
            norm(v.embed(cfg.nt, cfg.nx), "Holder12")
            margin = min(margin, v.h1() - norm(v, "Linf"))
        yield VerifyRow("holder_embedding", 10, margin, 1e-12,
                        "pass" if margin >= -1e-12 else "FAIL")
    except GridTooLarge as exc:
        yield VerifyRow("holder_embedding", 0, 0.0, 1e-12, "skip", str(exc))


def _checks_hbuilder(cfg, rng):
    nt, nx = 128, 64
    x = x_nodes(nx)[None, :]
    t = t_nodes(nt)[:, None]
    h = GridField(np.sin(x) * np.ones((nt, 1)))
    res = build_H(h)
    err = float(np.max(np.abs(res.H.values - np.sin(x) * np.ones((nt, 1)))))
    yield VerifyRow("h_sine_reconstruction", 1, err, 1e-5,
                    "pass" if err <= 1e-5 else "FAIL")

    worst = 0.0
    low = np.inf
    for _ in range(3):
        a = rng.uniform(-0.04, 0.04)
        l = int(rng.integers(1, 4))
        hv = np.sin(x) * np.ones((nt, 1)) + a * np.cos(l * t) * np.sin(3 * x)
        r = build_H(GridField(hv))
        worst = max(worst, r.boundary_max, r.weak_residual)
        low = min(low, r.interior_min)
    yield VerifyRow("h_family_residual", 3, worst, 1e-5,
                    "pass" if worst <= 1e-5 else "FAIL")
    yield VerifyRow("h_family_positivity", 3, low, 0.0,
                    "pass" if low > 0.0 else "FAIL")

    try:
        from .hbuilder import compute_c

        compute_c(GridField(np.sin(x) * np.ones((nt, 1))
                            + 0.2 * np.cos(t) * np.sin(x)))
        raised = False
    except NotInRangeSpace:
        raised = True
    yield VerifyRow("h_resonant_rejection", 1, 1.0 if raised else -1.0, 0.0,
                    "pass" if raised else "FAIL")


def _small_drive_spec(nt, nx):
    x = x_nodes(nx)[None, :]
    h = GridField(np.sin(2 * x) * np.ones((nt, 1)))
    return power_plus_forcing(1, 1.0, h, L=6, J=6)


def _checks_range(cfg, rng):
    ws = OperatorWorkspace(6, 6, 32, 16)
    spec = _small_drive_spec(ws.nt, ws.nx)
    _, eps0 = contraction_constants(spec, 1.0, ws)
    v = _random_kernel(rng, scale=0.2)
    worst_c = 0.0
    worst_r = 0.0
    iters = 0
    for s in (1.0, -1.0):
        sol = solve_range(v, s * eps0, spec, ws=ws)
        worst_c = max(worst_c, sol.contraction_estimate)
        worst_r = max(worst_r, sol.residual)
        iters += sol.iterations
    yield VerifyRow("range_contraction", iters, 0.55 - worst_c, 0.0,
                    "pass" if worst_c <= 0.55 else "FAIL")
    yield VerifyRow("range_residual", iters, worst_r, 1e-12,
                    "pass" if worst_r <= 1e-12 else "FAIL")


def _checks_reducer(cfg, rng):
    ws = OperatorWorkspace(6, 6, 32, 16)
    spec = _small_drive_spec(ws.nt, ws.nx)
    eps = 5e-3
    worst = 0.0
    for _ in range(3):
        v = _random_kernel(rng, scale=0.3)
        phi = reduced_functional(v, eps, spec, ws=ws)
        sol = solve_range(v, eps, spec, ws=ws)
        u = GridField(ws.embed(v).values + ws.synthesize(sol.w).values)
        worst = max(worst, abs(phi - _action_value(u, eps, spec, ws)))
    yield VerifyRow("functional_action_match", 3, worst, 1e-8,
                    "pass" if worst <= 1e-8 else "FAIL")

    low = np.inf
    for _ in range(3):
        v = _random_kernel(rng, scale=0.3)
        phi_dir = _random_kernel(rng, scale=1.0)
        g = reduced_gradient(v, eps, spec, ws=ws)
        d_exact = kernel_pairing(g, phi_dir)
        errs = []
        for delta in (1e-3, 5e-4):
            fp = reduced_functional(v + phi_dir.scaled(delta), eps, spec, ws=ws)
            fm = reduced_functional(v - phi_dir.scaled(delta), eps, spec, ws=ws)
            errs.append(abs((fp - fm) / (2 * delta) - d_exact))
        order = np.log2(errs[0] / errs[1]) if errs[1] > 0 else 2.0
        low = min(low, order)
    yield VerifyRow("gradient_difference_order", 3, low, 1.9,
                    "pass" if low >= 1.9 else "FAIL")


VERIFY_SUITES = {
    "operators": _checks_operators,
    "identities": _checks_identities,
    "hbuilder": _checks_hbuilder,
    "range": _checks_range,
    "reducer": _checks_reducer,
}


def run_verify(cfg=None, suite=None):
    """Run the invariant suites; returns (rows, all_pass).

    Failures are data (rows with status FAIL), not exceptions; skipped
    rows (capped diagnostics) do not fail the suite.  The table is
    persisted as verify.csv with columns
    identity,samples,worst_margin,tolerance,pass.
    """
    cfg = cfg or RunConfig()
    if suite is not None and suite not in VERIFY_SUITES:
        raise ConfigError(
            f"unknown suite {suite!r}; choose from {sorted(VERIFY_SUITES)}"
        )
    names = [suite] if suite else list(VERIFY_SUITES)
    rows = []
    for name in names:
        idx = sorted(VERIFY_SUITES).index(name)
        rng = np.random.default_rng([cfg.seed, idx])
        rows.extend(VERIFY_SUITES[name](cfg, rng))
    run_dir = _run_dir(cfg, "verify")
    with open(os.path.join(run_dir, "verify.csv"), "w") as fh:
        fh.write("identity,samples,worst_margin,tolerance,pass\n")
        for r in rows:
            fh.write(
                f"{r.identity},{r.samples},{r.worst_margin:.17e},"
                f"{r.tolerance:.17e},{r.status}\n"
            )
    all_pass = all(r.status != "FAIL" for r in rows)
    return rows, all_pass
