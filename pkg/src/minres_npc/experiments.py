"""Desk-scale experiments: three 20x20 spectra and the Newton-MR comparison."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .io import read_dataset_csv
from .minres import FIG1_COLUMNS, MinresConfig, minres_solve
from .newton import (
    REGULARIZERS,
    LineSearchParams,
    NewtonConfig,
    NlsProblem,
    Variant,
    identical_prefix,
    make_blobs,
    newton_mr_run,
)
from .operators import from_spectrum
from .oracles import jacobi_eigen
from .rng import make_rng


@dataclass(frozen=True)
class Fig1Config:
    """Spectra for the three curvature test matrices.

    All three share a frame of eigenvectors drawn from the Gaussian orthogonal
    ensemble. ``A`` appends ``tail_A`` to the top spectrum, ``B`` appends
    ``tail_B``, and ``C`` replaces the two smallest top eigenvalues by
    ``tail_C``.
    """

    d: int = 20
    top_low: float = 1.0
    top_high: float = 1e3
    tail_A: tuple = (0.0,)
    tail_B: tuple = (-1.0,)
    tail_C: tuple = (-10.0, -1.0)

    @property
    def spectrum_top(self):
        return np.logspace(np.log10(self.top_low), np.log10(self.top_high), self.d - 1)

    def spectra(self):
        top = self.spectrum_top
        ntail = len(self.tail_C)
        return {
            "A": np.sort(np.concatenate([self.tail_A, top])),
            "B": np.sort(np.concatenate([self.tail_B, top])),
            "C": np.sort(np.concatenate([self.tail_C, top[ntail - 1 :]])),
        }


def goe_matrix(rng, d):
    """Symmetric Gaussian matrix: off-diagonal N(0, 1), diagonal N(0, 2)."""
    N = rng.standard_normal((d, d))
    return (N + N.T) / np.sqrt(2.0)


def build_fig1_matrices(seed=0, config=None):
    """Return ``{"A": ..., "B": ..., "C": ...}`` sharing one random eigenvector frame.

    The frame is the Jacobi eigenvector matrix of a GOE draw; each prescribed
    spectrum (ascending) is assigned to its columns in order.
    """
    config = config or Fig1Config()
    rng = make_rng(seed)
    frame = jacobi_eigen(goe_matrix(rng, config.d)).eigenvectors
    return {name: from_spectrum(lam, frame) for name, lam in config.spectra().items()}


def fig1_rhs(config=None):
    config = config or Fig1Config()
    return np.ones(config.d)


def fig1_solver_config(rtol=0.0, maxit=None, stop_on_npc=False, reorth=True):
    return MinresConfig(rtol=rtol, maxit=maxit, stop_on_npc=stop_on_npc, reorth=reorth, diagnostics=True)


def run_fig1(seed=0, config=None, solver=None):
    """Run the diagnostic solver on each matrix with ``b = 1``.

    Returns ``{name: SolveOutcome}``. By default the solver runs to breakdown
    without stopping at NPC detections so the full trace is visible.
    """
    solver = solver or fig1_solver_config()
    mats = build_fig1_matrices(seed, config)
    b = fig1_rhs(config)
    return {name: minres_solve(A, b, solver) for name, A in mats.items()}


def fig1_csv(outcome):
    return outcome.trace.to_csv(FIG1_COLUMNS)


@dataclass
class RunRecord:
    """One experiment run: what was asked, the per-iteration CSV, and a summary."""

    experiment: str
    config: dict
    csv: str
    summary: dict = field(default_factory=dict)

    def to_dict(self):
        return {"experiment": self.experiment, "config": self.config, "summary": self.summary}


NEWTON_DEFAULTS = {
    "dataset": None,
    "n": 500,
    "d": 20,
    "seed": 0,
    "separation": 1.0,
    "w0_scale": 0.5,
    "regularizers": ["l2", "none", "nonconvex"],
    "variants": ["npc", "grad"],
    "grad_tol": 1e-10,
    "inner_rtol": 0.01,
    "maxouter": 500,
    "rho": 1e-4,
    "shrink": 0.5,
    "max_backtracks": 50,
}


def newton_config(overrides=None):
    """Merge ``overrides`` into :data:`NEWTON_DEFAULTS`, rejecting unknown keys.

    Raises
    ------
    ValidationError
        Lists every unknown key, or names a key whose value has the wrong type.
    """
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(NEWTON_DEFAULTS))
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {**NEWTON_DEFAULTS, **overrides}
    for key in ("n", "d", "seed", "maxouter", "max_backtracks"):
        if isinstance(cfg[key], bool) or not isinstance(cfg[key], int):
            raise ValidationError(f"config key '{key}' must be an integer, got {cfg[key]!r}")
    for key in ("separation", "w0_scale", "grad_tol", "inner_rtol", "rho", "shrink"):
        if isinstance(cfg[key], bool) or not isinstance(cfg[key], (int, float)):
            raise ValidationError(f"config key '{key}' must be a number, got {cfg[key]!r}")
        cfg[key] = float(cfg[key])
    if cfg["dataset"] is not None and not isinstance(cfg["dataset"], str):
        raise ValidationError("config key 'dataset' must be a path or null")
    bad = [r for r in cfg["regularizers"] if r not in REGULARIZERS]
    if bad:
        raise ValidationError(f"config key 'regularizers' has unknown entries: {', '.join(map(str, bad))}")
    valid = {v.value for v in Variant}
    bad = [v for v in cfg["variants"] if v not in valid]
    if bad:
        raise ValidationError(f"config key 'variants' has unknown entries: {', '.join(map(str, bad))}")
    return cfg


def newton_data(cfg):
    """Features and labels from the configured CSV, or the seeded blobs."""
    if cfg["dataset"]:
        return read_dataset_csv(cfg["dataset"])
    return make_blobs(cfg["n"], cfg["d"], seed=cfg["seed"], separation=cfg["separation"])


def run_newton_experiment(overrides=None):
    """Run every (regularizer, variant) pair from one shared start.

    The start is ``w0_scale`` times a standard normal draw keyed by ``seed``,
    so the nonconvex losses begin away from the flat region at the origin.
    Returns a list of ``(RunRecord, OptimizerTrace)``.
    """
    cfg = newton_config(overrides)
    X, y = newton_data(cfg)
    w0 = cfg["w0_scale"] * make_rng(cfg["seed"]).standard_normal(X.shape[1])
    ls = LineSearchParams(rho=cfg["rho"], shrink=cfg["shrink"], max_backtracks=cfg["max_backtracks"])
    solver = NewtonConfig(grad_tol=cfg["grad_tol"], inner_rtol=cfg["inner_rtol"], maxouter=cfg["maxouter"], line_search=ls)
    results = []
    for reg in cfg["regularizers"]:
        prob = NlsProblem(X, y, reg)
        traces = {}
        for variant in cfg["variants"]:
            _, trace = newton_mr_run(prob, w0, variant, solver, keep_iterates=True)
            traces[variant] = trace
        prefix = None
        if len(traces) == 2:
            prefix = identical_prefix(*traces.values())
        for variant, trace in traces.items():
            f = trace.column("f")
            summary = {
                "status": trace.status,
                "iterations": len(trace) - 1,
                "final_f": float(f[-1]),
                "final_grad_norm": float(trace.final.grad_norm),
                "npc_steps": int(trace.npc_steps),
                "oracle_calls": int(trace.final.cumulative_oracle_calls),
                "f_monotone": bool(np.all(np.diff(f) <= 0.0)),
                "oracle_formula_holds": all(trace.expected_calls(r) == r.oracle_calls for r in trace.records),
            }
            if prefix is not None:
                summary["identical_prefix"] = {"length": prefix[0], "bitwise_equal": prefix[1]}
            record = RunRecord(f"newton-{reg}-{variant}", {**cfg, "regularizer": reg, "variant": variant}, trace.to_csv(), summary)
            results.append((record, trace))
    return results
