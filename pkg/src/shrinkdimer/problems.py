"""Force fields: the Problem record, built-in test systems and a registry."""

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import as_frame, as_vector, gram_schmidt
from .exceptions import InputError, ProblemLookupError

GRADIENT = "gradient"
NON_GRADIENT = "non-gradient"
KINDS = (GRADIENT, NON_GRADIENT)


@dataclass(frozen=True)
class Problem:
    """A force field ``F: R^N -> R^N``.

    For gradient problems ``F = -grad E`` and ``exact_hvp(x, v) = -Hess E(x) v``;
    for non-gradient ones ``exact_hvp`` is the Jacobian action ``J(x) v``.
    ``params`` identifies parameterized instances (used in cache keys).
    """

    name: str
    dimension: int
    kind: str
    force: Callable[[np.ndarray], np.ndarray]
    energy: Optional[Callable[[np.ndarray], float]] = None
    exact_hvp: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.dimension < 1:
            raise InputError(f"dimension must be >= 1, got {self.dimension}")
        if self.energy is not None and self.kind != GRADIENT:
            raise InputError("only gradient problems may carry an energy")

    @property
    def fingerprint(self):
        """Stable text identity of this problem instance."""
        return json.dumps(
            {"name": self.name, "N": self.dimension, "kind": self.kind, "params": self.params},
            sort_keys=True,
        )


@dataclass(frozen=True)
class InitialCondition:
    """Starting point, starting frame and (optionally) a fixed initial dimer length.

    The frame is re-orthonormalized on construction; ``frame_correction``
    records how far the supplied vectors were from orthonormal.
    """

    x0: np.ndarray
    frame0: np.ndarray
    l0: Optional[float] = None
    frame_correction: float = field(default=0.0, compare=False)

    def __post_init__(self):
        x0 = as_vector(self.x0, name="x0")
        raw = as_frame(self.frame0, dim=x0.shape[0])
        frame, corr = gram_schmidt(raw)
        x0.setflags(write=False)
        frame.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "frame0", frame)
        object.__setattr__(self, "frame_correction", float(np.max(corr)))
        if self.l0 is not None and not self.l0 > 0:
            raise InputError(f"l0 must be positive, got {self.l0!r}")

    @property
    def k(self):
        return self.frame0.shape[0]

    @property
    def dimension(self):
        return self.x0.shape[0]


# --- stingray: E = x1^2 + (x1 - 1) x2^2 ---

def stingray_energy(x):
    x1, x2 = x
    return x1 * x1 + (x1 - 1.0) * x2 * x2


def stingray_force(x):
    x1, x2 = x
    return np.array([-2.0 * x1 - x2 * x2, -2.0 * (x1 - 1.0) * x2])


def exact_hvp_stingray(x, v):
    x1, x2 = x
    v1, v2 = v
    return -np.array([2.0 * v1 + 2.0 * x2 * v2, 2.0 * x2 * v1 + 2.0 * (x1 - 1.0) * v2])


# --- three-dimensional non-gradient system ---

NONGRADIENT3_MATRIX = np.array(
    [
        [1.0, 0.5, 0.0],
        [-0.5, 1.0, -0.3],
        [0.0, -0.2, 1.0],
    ]
)
NONGRADIENT3_CENTERS = np.array([1.0, 2.0, -1.0])


def nongradient3_force(x):
    x = np.asarray(x, dtype=float)
    s = x - NONGRADIENT3_CENTERS
    return NONGRADIENT3_MATRIX @ x + 1.0 / (1.0 + s * s)


def exact_hvp_nongradient3(x, v):
    s = np.asarray(x, dtype=float) - NONGRADIENT3_CENTERS
    dg = -2.0 * s / (1.0 + s * s) ** 2
    return NONGRADIENT3_MATRIX @ v + dg * v


# --- one-dimensional cubic ---

def cubic1d_force(x):
    return np.asarray(x, dtype=float) ** 3


def _cubic1d_energy(x):
    return -0.25 * float(x[0]) ** 4


def _cubic1d_hvp(x, v):
    return 3.0 * np.asarray(x, dtype=float) ** 2 * np.asarray(v, dtype=float)


def linear_problem(matrix, offset=None, name="linear", kind=None):
    """``F(x) = M x + b``; a gradient problem iff ``M`` is symmetric (unless ``kind`` is given)."""
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"matrix must be square, got shape {m.shape}")
    n = m.shape[0]
    b = np.zeros(n) if offset is None else as_vector(offset, dim=n, name="offset")
    symmetric = np.array_equal(m, m.T)
    if kind is None:
        kind = GRADIENT if symmetric else NON_GRADIENT
    m.setflags(write=False)
    b.setflags(write=False)

    def force(x):
        return m @ np.asarray(x, dtype=float) + b

    def hvp(x, v):
        return m @ np.asarray(v, dtype=float)

    energy = None
    if kind == GRADIENT and symmetric:
        def energy(x):
            x = np.asarray(x, dtype=float)
            return float(-0.5 * x @ m @ x - b @ x)

    return Problem(
        name=name,
        dimension=n,
        kind=kind,
        force=force,
        energy=energy,
        exact_hvp=hvp,
        params={"matrix": m.tolist(), "offset": b.tolist()},
    )


def _stingray():
    return Problem(
        name="stingray",
        dimension=2,
        kind=GRADIENT,
        force=stingray_force,
        energy=stingray_energy,
        exact_hvp=exact_hvp_stingray,
    )


def _nongradient3():
    return Problem(
        name="nongradient3",
        dimension=3,
        kind=NON_GRADIENT,
        force=nongradient3_force,
        exact_hvp=exact_hvp_nongradient3,
    )


def _cubic1d():
    return Problem(
        name="cubic1d",
        dimension=1,
        kind=GRADIENT,
        force=cubic1d_force,
        energy=_cubic1d_energy,
        exact_hvp=_cubic1d_hvp,
    )


def _linear(matrix=None, offset=None, kind=None):
    if matrix is None:
        raise InputError("the 'linear' problem needs matrix=...")
    return linear_problem(matrix, offset, kind=kind)


_FACTORIES = {
    "stingray": _stingray,
    "nongradient3": _nongradient3,
    "cubic1d": _cubic1d,
    "linear": _linear,
}
_USER = {}


def available():
    return sorted(set(_FACTORIES) | set(_USER))


def register(problem, overwrite=False):
    """Make ``problem`` retrievable through :func:`registry_get`."""
    if not isinstance(problem, Problem):
        raise InputError("register() expects a Problem")
    if not overwrite and (problem.name in _USER or problem.name in _FACTORIES):
        raise InputError(f"problem {problem.name!r} is already registered")
    _USER[problem.name] = problem
    return problem


def unregister(name):
    _USER.pop(name, None)


def registry_get(name, **params):
    """Look up a problem by name; ``params`` go to parameterized built-ins."""
    if name in _USER:
        if params:
            raise InputError(f"registered problem {name!r} takes no parameters")
        return _USER[name]
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ProblemLookupError(
            f"unknown problem {name!r}; available: {', '.join(available())}"
        ) from None
    return factory(**params)


def load_problem_file(path):
    """Read a linear test problem from JSON: ``{"name", "matrix", "offset"}``."""
    with open(path) as fh:
        spec = json.load(fh)
    try:
        matrix = spec["matrix"]
    except KeyError:
        raise InputError(f"{path}: missing 'matrix'") from None
    return linear_problem(
        matrix, spec.get("offset"), name=spec.get("name", "linear"), kind=spec.get("kind")
    )


_S2 = 1.0 / math.sqrt(2.0)
_DEFAULT_ICS = {
    ("stingray", 1): ([1.0, 1.0], [[0.0, 1.0]]),
    ("stingray", 2): ([1.0, 1.0], [[0.0, 1.0], [1.0, 0.0]]),
    ("nongradient3", 1): ([-1.0, 1.0, 0.0], [[-1.0, 0.0, 0.0]]),
    ("nongradient3", 2): ([-1.0, 1.0, 0.0], [[-_S2, _S2, 0.0], [_S2, _S2, 0.0]]),
}


def default_initial_condition(name, k):
    """The standard starting data used for the convergence experiments."""
    try:
        x0, frame0 = _DEFAULT_ICS[(name, k)]
    except KeyError:
        raise InputError(f"no default initial condition for problem {name!r} with k={k}") from None
    return InitialCondition(x0=x0, frame0=frame0)

