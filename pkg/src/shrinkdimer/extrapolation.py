"""Second-order Richardson combination of a coarse and a half-step trajectory."""

import numpy as np

from .core import gram_schmidt
from .exceptions import InputError


class ExtrapolatedTrajectory:
    """``2 * fine[2n] - coarse[n]`` on the coarse grid.

    The extrapolated directions are a plain linear combination and are not
    renormalized; :meth:`orthonormalized` gives a Gram-Schmidt view.
    """

    extrapolated = True

    def __init__(self, t, x, v, source_taus, l=None, problem_name=None, fingerprint=None, config=None):
        self.t = t
        self.x = x
        self.v = v
        self.source_taus = source_taus
        self.l = l
        self.problem_name = problem_name
        self.fingerprint = fingerprint or problem_name
        self.config = config

    @property
    def tau(self):
        return self.source_taus[0]

    @property
    def steps(self):
        return len(self.t) - 1

    def __len__(self):
        return len(self.t)

    def norm_defects(self):
        """``| ||v^R_{i,n}|| - 1 |`` with shape ``(K+1, k)``."""
        return np.abs(np.linalg.norm(self.v, axis=2) - 1.0)

    def orthonormalized(self):
        return np.array([gram_schmidt(frame)[0] for frame in self.v])


def richardson_combine(coarse, fine):
    """Cancel the leading O(tau) error of two explicit-Euler runs.

    ``fine`` must use exactly half of ``coarse``'s step on the same interval
    and start from the same state.
    """
    if fine.tau * 2.0 != coarse.tau:
        raise InputError(f"fine step {fine.tau!r} is not half the coarse step {coarse.tau!r}")
    if fine.steps != 2 * coarse.steps:
        raise InputError(f"fine run has {fine.steps} steps, expected {2 * coarse.steps}")
    if coarse.config is not None and fine.config is not None and coarse.config.T != fine.config.T:
        raise InputError("coarse and fine runs cover different intervals")
    if coarse.fingerprint != fine.fingerprint:
        raise InputError(f"runs are of different problems: {coarse.problem_name!r} vs {fine.problem_name!r}")
    if coarse.v.shape[1:] != fine.v.shape[1:]:
        raise InputError("coarse and fine frames have different shapes")
    if not (np.array_equal(coarse.x[0], fine.x[0]) and np.array_equal(coarse.v[0], fine.v[0])):
        raise InputError("coarse and fine runs start from different initial states")
    x = 2.0 * fine.x[::2] - coarse.x
    v = 2.0 * fine.v[::2] - coarse.v
    return ExtrapolatedTrajectory(
        t=np.array(coarse.t),
        x=x,
        v=v,
        source_taus=(coarse.tau, fine.tau),
        l=None if coarse.l is None else np.array(coarse.l),
        problem_name=coarse.problem_name,
        fingerprint=coarse.fingerprint,
        config=coarse.config,
    )
