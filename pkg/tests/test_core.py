import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shrinkdimer.core import (
    dimer_hessian_apply,
    dimer_length_at,
    gram_schmidt,
    householder_apply,
    orthonormality_defect,
    stable_projector_apply,
    symmetrized_projector_apply,
)
from shrinkdimer.exceptions import DegenerateFrameError, InputError
from shrinkdimer.problems import stingray_force

EPS = np.finfo(float).eps


# --- householder_apply ---

def test_householder_flips_frame_vector():
    np.testing.assert_array_equal(householder_apply([[1.0, 0.0]], [-1.0, 0.0]), [1.0, 0.0])


def test_householder_leaves_orthogonal_force():
    # stingray drift at x0=(1,1) is orthogonal to v0=(0,1)
    np.testing.assert_array_equal(householder_apply([[0.0, 1.0]], [-3.0, 0.0]), [-3.0, 0.0])


def test_householder_full_frame_is_minus_identity():
    np.testing.assert_array_equal(householder_apply(np.eye(2), [2.5, -7.0]), [-2.5, 7.0])


def test_householder_dimension_mismatch():
    with pytest.raises(InputError):
        householder_apply([[1.0, 0.0]], [1.0, 2.0, 3.0])


# --- stable_projector_apply (zero-based i) ---

def test_stable_projector_orthogonal_input():
    np.testing.assert_array_equal(stable_projector_apply([[0.0, 1.0]], 0, [-2.0, 0.0]), [-2.0, 0.0])


def test_stable_projector_annihilates_parallel():
    np.testing.assert_array_equal(stable_projector_apply([[1.0, 0.0]], 0, [4.0, 0.0]), [0.0, 0.0])


def test_stable_projector_second_direction():
    # (I - v2 v2^T - 2 v1 v1^T)(1,1) = (1,1) - (0,1) - (2,0)
    np.testing.assert_array_equal(stable_projector_apply(np.eye(2), 1, [1.0, 1.0]), [-1.0, 0.0])


@pytest.mark.parametrize("i", [-1, 2, 1.0])
def test_stable_projector_bad_index(i):
    with pytest.raises(InputError):
        stable_projector_apply(np.eye(2), i, [1.0, 1.0])


# --- symmetrized_projector_apply ---

def test_symmetrized_k1_matches_stable():
    frame = np.array([[0.6, 0.8, 0.0]])
    h = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(
        symmetrized_projector_apply(frame, 0, [h]), stable_projector_apply(frame, 0, h), rtol=0, atol=1e-15
    )


def test_symmetrized_second_direction_hand_value():
    # (I - v2 v2^T) h2 = (1,0); v1 (v1.h2 + v2.h1) = (1,0) * (1 + 1) = (2,0)
    out = symmetrized_projector_apply(np.eye(2), 1, [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(out, [-1.0, 0.0])


def test_symmetrized_zero_input():
    np.testing.assert_array_equal(symmetrized_projector_apply(np.eye(2), 1, np.zeros((2, 2))), [0.0, 0.0])


def test_symmetrized_symmetric_jacobian_matches_stable():
    # for symmetric H, v_j^T H v_i + v_i^T H v_j = 2 v_j^T H v_i
    rng_frame, _ = gram_schmidt([[1.0, 2.0, 0.5], [0.0, 1.0, -1.0]])
    H = np.array([[2.0, 0.3, -1.0], [0.3, -1.0, 0.4], [-1.0, 0.4, 0.5]])
    hs = [H @ v for v in rng_frame]
    np.testing.assert_allclose(
        symmetrized_projector_apply(rng_frame, 1, hs),
        stable_projector_apply(rng_frame, 1, hs[1]),
        atol=1e-14,
    )


def test_symmetrized_short_list():
    with pytest.raises(InputError):
        symmetrized_projector_apply(np.eye(2), 1, [[1.0, 0.0]])


# --- gram_schmidt ---

def test_gs_identity():
    frame, corr = gram_schmidt(np.eye(2))
    np.testing.assert_array_equal(frame, np.eye(2))
    np.testing.assert_array_equal(corr, [0.0, 0.0])


def test_gs_scale_then_project():
    frame, _ = gram_schmidt([[2.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(frame, np.eye(2), atol=1e-15)


def test_gs_stingray_first_step():
    frame, corr = gram_schmidt([[-0.0625, 1.0]])
    norm = math.sqrt(1.00390625)
    np.testing.assert_allclose(frame[0], [-0.0625 / norm, 1.0 / norm], rtol=1e-15)
    np.testing.assert_allclose(frame[0], [-0.0623783, 0.9980526], atol=1e-7)
    assert corr[0] == pytest.approx(math.hypot(-0.0625 / norm + 0.0625, 1 / norm - 1), rel=1e-12)


def test_gs_degenerate():
    with pytest.raises(DegenerateFrameError) as info:
        gram_schmidt([[1.0, 1.0], [2.0, 2.0]])
    assert info.value.index == 1


def test_gs_zero_vector():
    with pytest.raises(DegenerateFrameError):
        gram_schmidt([[0.0, 0.0]])


def test_gs_rejects_too_many_vectors():
    with pytest.raises(InputError):
        gram_schmidt(np.ones((3, 2)))


# --- dimer_hessian_apply ---

def test_dimer_linear_exact():
    out = dimer_hessian_apply(lambda x: np.array([-x[0], x[1]]), [1.0, 1.0], [0.0, 1.0], 0.1)
    np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("l", [1.0, 0.1, 1e-3])
def test_dimer_stingray_closed_form(l):
    np.testing.assert_allclose(dimer_hessian_apply(stingray_force, [1.0, 1.0], [0.0, 1.0], l), [-2.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("l", [1e-3, 1e-2, 1e-1])
def test_dimer_quadratic_decay_stingray_generic(l):
    # Hessian action is exact for the quadratic-in-x stingray, so use a cubic perturbation
    force = lambda y: stingray_force(y) + np.array([y[0] ** 3, 0.0])
    x = np.array([0.3, -0.7])
    v = np.array([0.6, 0.8])
    exact = np.array([-2.0 * v[0] - 2.0 * x[1] * v[1] + 3 * x[0] ** 2 * v[0], -2.0 * x[1] * v[0] - 2.0 * (x[0] - 1.0) * v[1]])
    e1 = np.linalg.norm(dimer_hessian_apply(force, x, v, l) - exact)
    e2 = np.linalg.norm(dimer_hessian_apply(force, x, v, l / 2) - exact)
    assert 3.5 <= e1 / e2 <= 4.5


def test_dimer_cubic_error_is_l_squared():
    # ((x+l)^3 - (x-l)^3) / 2l = 3x^2 + l^2
    out = dimer_hessian_apply(lambda x: x**3, np.array([1.0]), np.array([1.0]), 0.1)
    assert out[0] == pytest.approx(3.01, abs=1e-13)


@pytest.mark.parametrize("l", [0.0, -0.1])
def test_dimer_nonpositive_length(l):
    with pytest.raises(InputError):
        dimer_hessian_apply(stingray_force, [1.0, 1.0], [0.0, 1.0], l)


def test_dimer_accepts_problem_objects():
    class P:
        force = staticmethod(stingray_force)

    np.testing.assert_allclose(dimer_hessian_apply(P, [1.0, 0.0], [1.0, 0.0], 0.2), [-2.0, 0.0])


# --- dimer_length_at ---

def test_dimer_length_values():
    assert dimer_length_at(0.0, 0.5) == 0.5
    assert dimer_length_at(1.0, 1.0) == pytest.approx(0.3678794412, abs=1e-10)
    tau = 2.0**-5
    assert dimer_length_at(tau, math.sqrt(tau)) == math.sqrt(tau) * math.exp(-tau)


@pytest.mark.parametrize("t,l0", [(-1.0, 1.0), (0.0, 0.0), (1.0, -2.0)])
def test_dimer_length_validation(t, l0):
    with pytest.raises(InputError):
        dimer_length_at(t, l0)


# --- properties ---

@st.composite
def frames_and_vectors(draw):
    n = draw(st.integers(1, 6))
    k = draw(st.integers(1, n))
    elems = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
    raw = draw(arrays(float, (k, n), elements=elems))
    f = draw(arrays(float, (n,), elements=elems))
    try:
        # a second pass restores orthogonality lost to ill-conditioned draws
        frame, _ = gram_schmidt(gram_schmidt(raw)[0])
    except DegenerateFrameError:
        frame, _ = gram_schmidt(np.eye(n)[:k])
    return frame, f


@settings(max_examples=200, deadline=None)
@given(frames_and_vectors())
def test_householder_norm_and_involution(data):
    frame, f = data
    n = frame.shape[1]
    nf = np.linalg.norm(f)
    once = householder_apply(frame, f)
    assert abs(np.linalg.norm(once) - nf) <= 8 * EPS * n * nf + 1e-300
    twice = householder_apply(frame, once)
    assert np.linalg.norm(twice - f) <= 16 * EPS * n * nf + 1e-300


@settings(max_examples=200, deadline=None)
@given(frames_and_vectors())
def test_projector_annihilation(data):
    frame, _ = data
    for i, v in enumerate(frame):
        assert np.linalg.norm(stable_projector_apply(frame, i, v)) <= 1e-12
        np.testing.assert_allclose(householder_apply(frame, v), -v, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(frames_and_vectors())
def test_gs_idempotent_and_orthonormal(data):
    frame, _ = data
    assert orthonormality_defect(frame) <= 1e-12
    again, corr = gram_schmidt(frame)
    assert np.max(corr) <= 1e-12
    np.testing.assert_allclose(again, frame, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    arrays(float, (3, 4), elements=st.floats(-5, 5, allow_nan=False)).filter(
        lambda a: np.linalg.svd(a, compute_uv=False).min() > 1e-3
    )
)
def test_gs_span_preserved(raw):
    frame, _ = gram_schmidt(raw)
    for r in raw:
        proj = frame.T @ (frame @ r)
        assert np.linalg.norm(proj - r) <= 1e-10 * max(1.0, np.linalg.norm(r))


@settings(max_examples=100, deadline=None)
@given(
    arrays(float, (3, 3), elements=st.floats(-5, 5, allow_nan=False)),
    arrays(float, (3,), elements=st.floats(-5, 5, allow_nan=False)),
    arrays(float, (3,), elements=st.floats(-5, 5, allow_nan=False)),
    st.sampled_from([1.0, 0.1, 1e-4]),
)
def test_dimer_exact_on_affine_fields(M, b, x, l):
    v = np.array([0.6, 0.0, -0.8])
    out = dimer_hessian_apply(lambda y: M @ y + b, x, v, l)
    assert np.linalg.norm(out - M @ v) <= 1e-10 * (1 + np.linalg.norm(M, 2))
