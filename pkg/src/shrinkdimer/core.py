"""Frame algebra for shrinking-dimer saddle dynamics.

Frames are stored as ``(k, N)`` float arrays whose rows are the direction
vectors ``v_1 .. v_k``. Direction indices are zero-based throughout the
package, so ``i = 0`` addresses ``v_1``.
"""

import math

import numpy as np

from .exceptions import DegenerateFrameError, InputError

ORTHO_TOL = 1e-10
GS_REL_TOL = 1e-12


def as_vector(x, dim=None, name="vector"):
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InputError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def as_frame(vectors, dim=None):
    """Coerce ``vectors`` into a ``(k, N)`` float array (no orthonormalization)."""
    arr = np.array(vectors, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InputError(f"frame must be a non-empty list of vectors, got shape {arr.shape}")
    k, n = arr.shape
    if dim is not None and n != dim:
        raise InputError(f"frame vectors have dimension {n}, expected {dim}")
    if k > n:
        raise InputError(f"frame has {k} vectors in dimension {n}")
    if not np.all(np.isfinite(arr)):
        raise InputError("frame has non-finite entries")
    return arr


def orthonormality_defect(frame):
    """``max_ij |v_i^T v_j - delta_ij|``."""
    frame = np.asarray(frame, dtype=float)
    gram = frame @ frame.T
    return float(np.max(np.abs(gram - np.eye(frame.shape[0]))))


def is_orthonormal(frame, tol=ORTHO_TOL):
    return orthonormality_defect(frame) <= tol


def _check_dims(frame, vec):
    frame = np.asarray(frame, dtype=float)
    vec = np.asarray(vec, dtype=float)
    if frame.ndim != 2 or vec.ndim != 1 or frame.shape[1] != vec.shape[0]:
        raise InputError(
            f"dimension mismatch: frame {frame.shape} against vector {vec.shape}"
        )
    return frame, vec


def householder_apply(frame, f):
    """Reflect ``f`` through the frame: ``(I - 2 sum_j v_j v_j^T) f``.

    For an orthonormal frame this is an orthogonal map, so ``||f||`` is kept.
    """
    frame, f = _check_dims(frame, f)
    return f - 2.0 * (frame.T @ (frame @ f))


def _check_index(frame, i):
    k = frame.shape[0]
    if not isinstance(i, (int, np.integer)) or not 0 <= i < k:
        raise InputError(f"direction index {i!r} out of range for k={k} (zero-based)")


def stable_projector_apply(frame, i, h):
    """``(I - v_i v_i^T - 2 sum_{j<i} v_j v_j^T) h`` for the gradient scheme."""
    frame, h = _check_dims(frame, h)
    _check_index(frame, i)
    vi = frame[i]
    out = h - vi * (vi @ h)
    if i:
        lower = frame[:i]
        out = out - 2.0 * (lower.T @ (lower @ h))
    return out


def symmetrized_projector_apply(frame, i, h_list):
    """Non-gradient direction update.

    Returns ``(I - v_i v_i^T) h_i - sum_{j<i} v_j (v_j^T h_i + v_i^T h_j)``
    where ``h_j`` is the dimer value along ``v_j``. Only ``h_list[:i+1]`` is
    read.
    """
    frame = np.asarray(frame, dtype=float)
    _check_index(frame, i)
    if len(h_list) < i + 1:
        raise InputError(f"need {i + 1} dimer values for direction {i}, got {len(h_list)}")
    hs = np.asarray(h_list[: i + 1], dtype=float)
    if hs.ndim != 2 or hs.shape[1] != frame.shape[1]:
        raise InputError(f"dimer values have shape {hs.shape}, expected (*, {frame.shape[1]})")
    vi, hi = frame[i], hs[i]
    out = hi - vi * (vi @ hi)
    if i:
        lower = frame[:i]
        coeff = lower @ hi + hs[:i] @ vi
        out = out - lower.T @ coeff
    return out


def gram_schmidt(raw, tol=GS_REL_TOL):
    """Modified Gram-Schmidt: project against finalized vectors in turn, then normalize.

    A second projection sweep runs when a vector loses more than ~30% of its
    norm to the first (ill-conditioned input); for nearly orthonormal input it
    never triggers. Returns ``(frame, corrections)`` with
    ``corrections[i] = ||v_i - raw_i||``. Raises :class:`DegenerateFrameError`
    if an intermediate norm falls below ``tol * max(1, ||raw_i||)``.
    """
    raw = as_frame(raw)
    k = raw.shape[0]
    out = np.empty_like(raw)
    corrections = np.empty(k)
    for i in range(k):
        w = raw[i].copy()
        start = float(np.linalg.norm(w))
        floor = tol * max(1.0, start)
        if start < floor or start == 0.0:
            raise DegenerateFrameError(f"direction {i} has vanishing norm", index=i)
        norm = start
        for sweep in range(2):
            for j in range(i):
                w -= (out[j] @ w) * out[j]
                norm_j = float(np.linalg.norm(w))
                if norm_j < floor:
                    raise DegenerateFrameError(
                        f"direction {i} is linearly dependent on directions 0..{j}", index=i
                    )
            before, norm = norm, float(np.linalg.norm(w))
            if sweep or i == 0 or norm >= 0.7071067811865476 * before:
                break
        out[i] = w / norm
        corrections[i] = float(np.linalg.norm(out[i] - raw[i]))
    return out, corrections


def dimer_hessian_apply(problem, x, v, l):
    """Central-difference Hessian (Jacobian) action ``(F(x+lv) - F(x-lv)) / 2l``.

    ``problem`` is anything with a ``force`` attribute, or a bare callable.
    """
    if not l > 0:
        raise InputError(f"dimer length must be positive, got {l!r}")
    force = getattr(problem, "force", problem)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape:
        raise InputError(f"position {x.shape} and direction {v.shape} differ in shape")
    plus = np.asarray(force(x + l * v), dtype=float)
    minus = np.asarray(force(x - l * v), dtype=float)
    return (plus - minus) / (2.0 * l)


def dimer_length_at(t, l0):
    """Dimer length at time ``t``, solved exactly: ``exp(-t) * l0``."""
    if not t >= 0:
        raise InputError(f"time must be non-negative, got {t!r}")
    if not l0 > 0:
        raise InputError(f"initial dimer length must be positive, got {l0!r}")
    return math.exp(-t) * l0
