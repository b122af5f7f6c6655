"""Explicit time stepping of the shrinking-dimer saddle dynamics."""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import (
    dimer_hessian_apply,
    dimer_length_at,
    gram_schmidt,
    householder_apply,
    stable_projector_apply,
    symmetrized_projector_apply,
)
from .exceptions import DegenerateFrameError, DivergenceError, InputError
from .problems import GRADIENT, KINDS, NON_GRADIENT

DIVERGENCE_LIMIT = 1e8
_GRID_TOL = 1e-9


@dataclass(frozen=True)
class SaddleConfig:
    """Scheme parameters.

    ``l0=None`` means the initial dimer length is ``sqrt(tau)``; ``mode=None``
    picks the scheme matching the problem's kind.
    """

    k: int
    tau: float
    beta: float = 1.0
    gamma: float = 1.0
    T: float = 1.0
    l0: Optional[float] = None
    mode: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise InputError(f"saddle index k must be a positive integer, got {self.k!r}")
        for name in ("tau", "beta", "gamma", "T"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InputError(f"{name} must be positive and finite, got {value!r}")
        if self.l0 is not None and not self.l0 > 0:
            raise InputError(f"l0 must be positive, got {self.l0!r}")
        if self.mode is not None and self.mode not in KINDS:
            raise InputError(f"mode must be one of {KINDS}, got {self.mode!r}")
        ratio = self.T / self.tau
        if round(ratio) < 1 or abs(ratio - round(ratio)) > _GRID_TOL * max(1.0, ratio):
            raise InputError(f"T/tau = {ratio!r} is not a positive integer")

    @property
    def steps(self):
        return int(round(self.T / self.tau))

    @property
    def initial_dimer_length(self):
        return math.sqrt(self.tau) if self.l0 is None else self.l0

    def with_tau(self, tau):
        return replace(self, tau=tau)


@dataclass(frozen=True)
class SaddleState:
    n: int
    t: float
    x: np.ndarray
    frame: np.ndarray
    l: float
    # F(x), carried so the next step does not re-evaluate it
    force: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def k(self):
        return self.frame.shape[0]


@dataclass(frozen=True)
class StepDiagnostics:
    """Pre-orthonormalization defects of one step, plus ``||F(x_n)||``."""

    max_cross: float
    max_norm_defect: float
    max_gs_correction: float
    residual: float


DIAGNOSTIC_FIELDS = ("max_cross", "max_norm_defect", "max_gs_correction", "residual")


class Trajectory:
    """States ``0..K`` and step diagnostics ``1..K`` stored as arrays.

    ``x`` has shape ``(K+1, N)``, ``v`` has shape ``(K+1, k, N)``, and
    ``diagnostics[name]`` has length ``K`` with entry ``n-1`` for step ``n``.
    """

    def __init__(self, config, problem_name, t, x, v, l, residual, diagnostics, fingerprint=None):
        self.config = config
        self.problem_name = problem_name
        self.fingerprint = fingerprint or problem_name
        self.t = t
        self.x = x
        self.v = v
        self.l = l
        self.residual = residual
        self.diagnostics = diagnostics

    @property
    def tau(self):
        return self.config.tau

    @property
    def steps(self):
        return len(self.t) - 1

    def __len__(self):
        return len(self.t)

    def state(self, n):
        return SaddleState(n=n, t=float(self.t[n]), x=self.x[n], frame=self.v[n], l=float(self.l[n]))

    @property
    def states(self):
        return [self.state(n) for n in range(len(self))]

    def step_diagnostics(self, n):
        if not 1 <= n <= self.steps:
            raise InputError(f"no diagnostics for step {n}")
        return StepDiagnostics(**{f: float(self.diagnostics[f][n - 1]) for f in DIAGNOSTIC_FIELDS})

    def max_diagnostic(self, name):
        values = self.diagnostics[name]
        return float(np.max(values)) if len(values) else 0.0

    def identical_to(self, other):
        """Bitwise equality of every stored array."""
        arrays = ("t", "x", "v", "l", "residual")
        if any(not np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays):
            return False
        return all(np.array_equal(self.diagnostics[f], other.diagnostics[f]) for f in DIAGNOSTIC_FIELDS)


def saddle_residual(problem, state):
    """Euclidean norm of the force at the state's position."""
    f = state.force if state.force is not None else problem.force(state.x)
    return float(np.linalg.norm(f))


def _resolve_mode(problem, config):
    mode = config.mode or problem.kind
    if mode == GRADIENT and problem.kind != GRADIENT:
        raise InputError(f"problem {problem.name!r} is non-gradient; the gradient scheme needs a gradient problem")
    return mode


def _check_state(problem, state, config):
    if state.k != config.k:
        raise InputError(f"state carries {state.k} directions, config expects k={config.k}")
    if state.x.shape[0] != problem.dimension:
        raise InputError(f"state dimension {state.x.shape[0]} != problem dimension {problem.dimension}")


def _finish_step(problem, state, config, x_new, raw):
    n = state.n + 1
    cross = 0.0
    k = raw.shape[0]
    if k > 1:
        gram = raw @ raw.T
        cross = float(np.max(np.abs(gram[np.triu_indices(k, 1)])))
    norm_defect = float(np.max(np.abs(np.einsum("ij,ij->i", raw, raw) - 1.0)))
    try:
        frame, corrections = gram_schmidt(raw)
    except DegenerateFrameError as exc:
        exc.step = n
        raise
    norm_x = float(np.linalg.norm(x_new))
    if not math.isfinite(norm_x) or norm_x > DIVERGENCE_LIMIT:
        raise DivergenceError(f"|x| = {norm_x:.3e} exceeds {DIVERGENCE_LIMIT:.0e}", step=n, tau=config.tau)
    f_new = np.asarray(problem.force(x_new), dtype=float)
    t = n * config.tau
    new = SaddleState(
        n=n,
        t=t,
        x=x_new,
        frame=frame,
        l=dimer_length_at(t, config.initial_dimer_length),
        force=f_new,
    )
    diag = StepDiagnostics(
        max_cross=cross,
        max_norm_defect=norm_defect,
        max_gs_correction=float(np.max(corrections)),
        residual=float(np.linalg.norm(f_new)),
    )
    return new, diag


def step_gradient(problem, state, config):
    """One explicit step of the gradient scheme; returns ``(state, diagnostics)``."""
    if problem.kind != GRADIENT:
        raise InputError(f"step_gradient needs a gradient problem, got {problem.kind!r}")
    _check_state(problem, state, config)
    f = state.force if state.force is not None else problem.force(state.x)
    frame = state.frame
    x_new = state.x + config.tau * config.beta * householder_apply(frame, f)
    raw = np.empty_like(frame)
    for i in range(config.k):
        h = dimer_hessian_apply(problem, state.x, frame[i], state.l)
        raw[i] = frame[i] + config.tau * config.gamma * stable_projector_apply(frame, i, h)
    return _finish_step(problem, state, config, x_new, raw)


def _symmetrized_step(problem, state, config):
    _check_state(problem, state, config)
    f = state.force if state.force is not None else problem.force(state.x)
    frame = state.frame
    x_new = state.x + config.tau * config.beta * householder_apply(frame, f)
    # one dimer per direction, shared by every i
    hs = [dimer_hessian_apply(problem, state.x, frame[j], state.l) for j in range(config.k)]
    raw = np.empty_like(frame)
    for i in range(config.k):
        raw[i] = frame[i] + config.tau * config.gamma * symmetrized_projector_apply(frame, i, hs)
    return _finish_step(problem, state, config, x_new, raw)


def step_nongradient(problem, state, config):
    """One explicit step of the symmetrized (non-gradient) scheme."""
    if problem.kind != NON_GRADIENT:
        raise InputError(f"step_nongradient needs a non-gradient problem, got {problem.kind!r}")
    return _symmetrized_step(problem, state, config)


def initial_state(problem, ic, config):
    if ic.dimension != problem.dimension:
        raise InputError(f"initial point has dimension {ic.dimension}, problem {problem.name!r} has {problem.dimension}")
    if ic.k != config.k:
        raise InputError(f"initial frame has {ic.k} directions, config expects k={config.k}")
    f0 = np.asarray(problem.force(ic.x0), dtype=float)
    return SaddleState(
        n=0,
        t=0.0,
        x=np.array(ic.x0),
        frame=np.array(ic.frame0),
        l=dimer_length_at(0.0, config.initial_dimer_length),
        force=f0,
    )


def resolve_config(ic, config):
    """Fold an initial-condition ``l0`` into the config when the config has none."""
    if config.l0 is None and ic.l0 is not None:
        return replace(config, l0=ic.l0)
    return config


def integrate(problem, ic, config):
    """Run the explicit scheme for ``K = T / tau`` steps."""
    config = resolve_config(ic, config)
    mode = _resolve_mode(problem, config)
    # the symmetrized form is also valid for gradient problems, so mode wins
    stepper = step_gradient if mode == GRADIENT else _symmetrized_step
    K = config.steps
    N, k = problem.dimension, config.k
    state = initial_state(problem, ic, config)
    x = np.empty((K + 1, N))
    v = np.empty((K + 1, k, N))
    l = np.empty(K + 1)
    residual = np.empty(K + 1)
    diag = {f: np.empty(K) for f in DIAGNOSTIC_FIELDS}
    x[0], v[0], l[0] = state.x, state.frame, state.l
    residual[0] = saddle_residual(problem, state)
    for n in range(1, K + 1):
        state, d = stepper(problem, state, config)
        x[n], v[n], l[n] = state.x, state.frame, state.l
        residual[n] = d.residual
        for f in DIAGNOSTIC_FIELDS:
            diag[f][n - 1] = getattr(d, f)
    t = np.arange(K + 1) * config.tau
    return Trajectory(config, problem.name, t, x, v, l, residual, diag, fingerprint=problem.fingerprint)

