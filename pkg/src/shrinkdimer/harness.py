"""Reference solutions, error norms, convergence ladders and scaling probes."""

import contextlib
import csv
import hashlib
import io
import json
import logging
import math
import os
import re
import subprocess
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import DIAGNOSTIC_FIELDS, Trajectory, integrate, resolve_config
from .exceptions import DivergenceError, InputError
from .extrapolation import richardson_combine

log = logging.getLogger(__name__)

DEFAULT_REF_TAU = 2.0**-13
DEFAULT_TAUS = tuple(2.0**-p for p in range(5, 9))
DEFAULT_PROBE_TAUS = tuple(2.0**-p for p in range(5, 10))
CACHE_ENV = "SADDLE_CACHE_DIR"
SCHEMES = ("euler", "richardson")
RATE_WINDOWS = {"euler": (0.90, 1.15), "richardson": (1.85, 2.15)}
PROBE_QUANTITIES = {
    "cross": "max_cross",
    "norm_defect": "max_norm_defect",
    "gs_correction": "max_gs_correction",
}
# errors below this are roundoff; no rate is reported for them
ROUNDOFF_FLOOR = 1e-12


class FrameFlipWarning(UserWarning):
    """A direction of the run points against the reference direction."""


@dataclass(frozen=True)
class ErrorSummary:
    max_ex: float
    max_ev: float
    flips: int = 0


@dataclass(frozen=True)
class ConvergenceRow:
    inv_tau: int
    max_ex: float
    cr_x: Optional[float]
    max_ev: float
    cr_v: Optional[float]


@dataclass
class ConvergenceReport:
    rows: list
    ref_tau: float
    problem: str
    k: int
    scheme: str = "euler"
    x0: list = field(default_factory=list)
    frame0: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def taus(self):
        return [1.0 / r.inv_tau for r in self.rows]

    def rates(self):
        return [r.cr_x for r in self.rows[1:]] + [r.cr_v for r in self.rows[1:]]

    def check(self, window=None):
        """Rows whose rates fall outside ``window`` (defaults per scheme)."""
        lo, hi = window or RATE_WINDOWS[self.scheme]
        bad = []
        for row in self.rows[1:]:
            for cr in (row.cr_x, row.cr_v):
                if cr is None or not lo <= cr <= hi:
                    bad.append(row)
                    break
        return bad

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["inv_tau", "max_ex", "cr_x", "max_ev", "cr_v"])
        for r in self.rows:
            writer.writerow([r.inv_tau, repr(r.max_ex), _opt(r.cr_x), repr(r.max_ev), _opt(r.cr_v)])
        return buf.getvalue()

    def to_json(self):
        doc = {
            "problem": self.problem,
            "k": self.k,
            "scheme": self.scheme,
            "x0": self.x0,
            "frame0": self.frame0,
            "config": self.config,
            "taus": self.taus,
            "ref_tau": self.ref_tau,
            "build": build_description(),
            "rows": [r.__dict__ for r in self.rows],
        }
        return json.dumps(doc, indent=2)

    def to_markdown(self):
        sup = "^R" if self.scheme == "richardson" else ""
        head = f"| 1/tau | max_n e{sup}_x | CR | max_n e{sup}_v | CR |"
        lines = [head, "|---|---|---|---|---|"]
        for r in self.rows:
            lines.append(
                f"| {_pow2(r.inv_tau)} | {r.max_ex:.2E} | {_fmt_cr(r.cr_x)} | {r.max_ev:.2E} | {_fmt_cr(r.cr_v)} |"
            )
        return "\n".join(lines) + "\n"

    def render(self, fmt):
        try:
            return {"csv": self.to_csv, "json": self.to_json, "md": self.to_markdown}[fmt]()
        except KeyError:
            raise InputError(f"unknown format {fmt!r}; use csv, json or md") from None


def _opt(value):
    return "" if value is None else repr(value)


def _fmt_cr(value):
    return "" if value is None else f"{value:.2f}"


def _pow2(n):
    p = int(round(math.log2(n)))
    return f"2^{p}" if 2**p == n else str(n)


def build_description():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass(frozen=True)
class ScalingProbeResult:
    quantity: str
    taus: list
    maxima: list
    slope: float


def fit_slope(taus, values):
    """Least-squares slope of ``log2(values)`` against ``log2(taus)``."""
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(taus) != len(values) or len(taus) < 2:
        raise InputError("need at least two matching points to fit a slope")
    if np.any(values <= 0):
        raise InputError("cannot fit a log-log slope through non-positive values")
    return float(np.polyfit(np.log2(taus), np.log2(values), 1)[0])


# --- grid alignment ---

def _dyadic_ratio(coarse, fine):
    ratio = coarse / fine
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-9 * ratio or m & (m - 1):
        raise InputError(f"step {coarse!r} is not a dyadic multiple of {fine!r}")
    return m


def _check_ladder(taus, ref_tau, scheme):
    if scheme not in SCHEMES:
        raise InputError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    taus = [float(t) for t in taus]
    if not taus:
        raise InputError("empty step ladder")
    for a, b in zip(taus, taus[1:]):
        if not b < a:
            raise InputError(f"step ladder must be strictly descending, got {taus}")
    for tau in taus:
        _dyadic_ratio(tau / 2.0 if scheme == "richardson" else tau, ref_tau)
    return taus


# --- reference solutions ---

def _cache_dir(cache_dir):
    if cache_dir is False:
        return None
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "shrinkdimer"
    path = Path(cache_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cache_key(problem, ic, config):
    doc = {
        "problem": problem.fingerprint,
        "x0": [float(c).hex() for c in ic.x0],
        "frame0": [[float(c).hex() for c in v] for v in ic.frame0],
        "k": config.k,
        "mode": config.mode or problem.kind,
        "beta": float(config.beta).hex(),
        "gamma": float(config.gamma).hex(),
        "T": float(config.T).hex(),
        "tau": float(config.tau).hex(),
        "l0": "sqrt(tau)" if config.l0 is None else float(config.l0).hex(),
        "version": 1,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:32]


def _save(path, traj):
    arrays = {"t": traj.t, "x": traj.x, "v": traj.v, "l": traj.l, "residual": traj.residual}
    arrays.update({f"diag_{f}": traj.diagnostics[f] for f in DIAGNOSTIC_FIELDS})
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".npz")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _load(path, problem, config):
    with np.load(path) as data:
        diag = {f: data[f"diag_{f}"] for f in DIAGNOSTIC_FIELDS}
        return Trajectory(
            config,
            problem.name,
            data["t"],
            data["x"],
            data["v"],
            data["l"],
            data["residual"],
            diag,
            fingerprint=problem.fingerprint,
        )


def integrate_cached(problem, ic, config, cache_dir=None):
    """:func:`integrate`, memoized on disk (atomic write-then-rename)."""
    config = resolve_config(ic, config)
    directory = _cache_dir(cache_dir)
    if directory is None:
        return integrate(problem, ic, config)
    label = re.sub(r"[^A-Za-z0-9_.-]", "_", problem.name)
    path = directory / f"{label}-k{config.k}-{_cache_key(problem, ic, config)}.npz"
    if path.exists():
        try:
            return _load(path, problem, config)
        except (OSError, KeyError, ValueError) as exc:
            log.warning("discarding unreadable cache entry %s: %s", path, exc)
    traj = integrate(problem, ic, config)
    _save(path, traj)
    return traj


def run_reference(problem, ic, config_base, ref_tau=DEFAULT_REF_TAU, extrapolated=False, cache_dir=None):
    """Fine-step reference run (``l0 = sqrt(ref_tau)`` unless the config fixes it).

    With ``extrapolated=True`` the reference is the Richardson combination of
    the ``ref_tau`` and ``ref_tau / 2`` runs, which is needed when the
    errors being measured are themselves second order.
    """
    coarse = integrate_cached(problem, ic, config_base.with_tau(ref_tau), cache_dir)
    if not extrapolated:
        return coarse
    fine = integrate_cached(problem, ic, config_base.with_tau(ref_tau / 2.0), cache_dir)
    return richardson_combine(coarse, fine)


def error_norms(traj, ref):
    """Max over nodes ``n >= 1`` of ``||x(t_n) - x_n||`` and ``sum_i ||v_i(t_n) - v_{i,n}||``."""
    stride = _dyadic_ratio(traj.tau, ref.tau) if traj.tau != ref.tau else 1
    if ref.steps != stride * traj.steps:
        raise InputError(f"reference has {ref.steps} steps, expected {stride * traj.steps}")
    if traj.x.shape[1:] != ref.x.shape[1:] or traj.v.shape[1:] != ref.v.shape[1:]:
        raise InputError("trajectory and reference have different shapes")
    rx = ref.x[stride::stride]
    rv = ref.v[stride::stride]
    if traj.steps == 0:
        return ErrorSummary(0.0, 0.0)
    ex = np.linalg.norm(traj.x[1:] - rx, axis=1)
    ev = np.linalg.norm(traj.v[1:] - rv, axis=2).sum(axis=1)
    flips = int(np.count_nonzero(np.einsum("nkd,nkd->nk", traj.v[1:], rv) < 0))
    if flips:
        warnings.warn(
            f"{flips} direction(s) point against the reference; sign is not corrected",
            FrameFlipWarning,
            stacklevel=2,
        )
    return ErrorSummary(float(ex.max()), float(ev.max()), flips)


def _rate(prev, curr, tau_prev, tau_curr):
    if prev <= ROUNDOFF_FLOOR or curr <= ROUNDOFF_FLOOR:
        return None
    return math.log(prev / curr) / math.log(tau_prev / tau_curr)


def _solution(problem, ic, config, scheme):
    coarse = integrate(problem, ic, config)
    if scheme == "euler":
        return coarse
    fine = integrate(problem, ic, config.with_tau(config.tau / 2.0))
    return richardson_combine(coarse, fine)


def convergence_ladder(
    problem,
    ic,
    config_base,
    taus=DEFAULT_TAUS,
    ref_tau=DEFAULT_REF_TAU,
    scheme="euler",
    cache_dir=None,
):
    """Error maxima and observed rates over a descending dyadic ladder of steps."""
    taus = _check_ladder(taus, ref_tau, scheme)
    ref = run_reference(problem, ic, config_base, ref_tau, extrapolated=scheme == "richardson", cache_dir=cache_dir)
    rows = []
    prev = None
    for tau in taus:
        config = config_base.with_tau(tau)
        try:
            sol = _solution(problem, ic, config, scheme)
        except DivergenceError as exc:
            exc.tau = tau
            raise
        err = error_norms(sol, ref)
        cr_x = cr_v = None
        if prev is not None:
            cr_x = _rate(prev[1].max_ex, err.max_ex, prev[0], tau)
            cr_v = _rate(prev[1].max_ev, err.max_ev, prev[0], tau)
        rows.append(ConvergenceRow(int(round(1.0 / tau)), err.max_ex, cr_x, err.max_ev, cr_v))
        prev = (tau, err)
    cfg = {
        "beta": config_base.beta,
        "gamma": config_base.gamma,
        "T": config_base.T,
        "l0": "sqrt(tau)" if config_base.l0 is None else config_base.l0,
        "mode": config_base.mode or problem.kind,
    }
    return ConvergenceReport(
        rows=rows,
        ref_tau=ref_tau,
        problem=problem.name,
        k=config_base.k,
        scheme=scheme,
        x0=ic.x0.tolist(),
        frame0=ic.frame0.tolist(),
        config=cfg,
    )


def scaling_probe(problem, ic, config_base, taus=DEFAULT_PROBE_TAUS, quantity="norm_defect"):
    """Max over steps of a pre-orthonormalization defect, for each step size, and its log-log slope."""
    try:
        field_name = PROBE_QUANTITIES[quantity]
    except KeyError:
        raise InputError(f"quantity must be one of {sorted(PROBE_QUANTITIES)}, got {quantity!r}") from None
    taus = [float(t) for t in taus]
    if len(taus) < 3:
        raise InputError("a scaling probe needs at least three step sizes")
    if quantity == "cross" and config_base.k < 2:
        raise InputError("the cross-orthogonality probe needs k >= 2")
    maxima = []
    for tau in taus:
        try:
            traj = integrate(problem, ic, config_base.with_tau(tau))
        except DivergenceError as exc:
            exc.tau = tau
            raise
        maxima.append(traj.max_diagnostic(field_name))
    return ScalingProbeResult(quantity=quantity, taus=taus, maxima=maxima, slope=fit_slope(taus, maxima))
