import math

import numpy as np
from conftest import cached_cgpt
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cgpt_sense.algebra import TransferMatrices, rotate_cgpt, scale_cgpt, transform_cgpt, translate_cgpt
from cgpt_sense.cgpt import CgptMatrix, from_complex, to_complex
from cgpt_sense.geometry import RigidMotion
from cgpt_sense.invariants import descriptor_distance, descriptors_from_cgpt

IDS = ["1a", "1b", "2a", "2b", "3a", "3b", "4a", "4b", "5a", "5b"]
finite = st.floats(-10, 10, allow_nan=False)
blocks = arrays(np.float64, (4, 4, 4), elements=finite)
ids = st.sampled_from(IDS)
angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
scales = st.floats(0.3, 2.0)
shifts = st.tuples(st.floats(-1, 1), st.floats(-1, 1))


def rel(a, b):
    return (a - b).norm() / max(b.norm(), 1e-300)


@given(blocks)
def test_complex_round_trip(b):
    M = CgptMatrix(*b)
    back = from_complex(to_complex(M))
    assert np.allclose(back.stacked(), M.stacked(), atol=1e-12)


@given(ids, shifts, angles, scales)
@settings(max_examples=40, deadline=None)
def test_motion_then_inverse(key, z, th, s):
    M = cached_cgpt(key)
    mo = RigidMotion(z, th, s)
    # exact in theory; in floating point the loss follows the transfer matrix conditioning
    T = TransferMatrices.for_motion(mo, M.order)
    kappa = np.linalg.cond(T.Cz @ T.Gw)
    assert rel(transform_cgpt(transform_cgpt(M, mo), mo.inverse()), M) < 1e-13 + 1e-15 * kappa**2


@given(ids, scales, scales)
@settings(max_examples=30, deadline=None)
def test_scale_law_multiplicative(key, s, t):
    M = cached_cgpt(key)
    assert rel(scale_cgpt(scale_cgpt(M, s), t), scale_cgpt(M, s * t)) < 1e-12


@given(ids, angles, angles)
@settings(max_examples=30, deadline=None)
def test_rotations_compose(key, a, b):
    M = cached_cgpt(key)
    assert rel(rotate_cgpt(rotate_cgpt(M, a), b), rotate_cgpt(M, a + b)) < 1e-12


@given(ids, shifts, shifts)
@settings(max_examples=30, deadline=None)
def test_translations_compose(key, a, b):
    M = cached_cgpt(key)
    two = translate_cgpt(translate_cgpt(M, a), b)
    assert rel(two, translate_cgpt(M, (a[0] + b[0], a[1] + b[1]))) < 1e-11


@given(ids, shifts, angles, scales)
@settings(max_examples=40, deadline=None)
def test_descriptors_nonnegative_and_normalised(key, z, th, s):
    D = descriptors_from_cgpt(transform_cgpt(cached_cgpt(key), RigidMotion(z, th, s)), 3)
    assert (D.I1 >= 0).all() and (D.I2 >= 0).all()
    assert np.allclose(np.diag(D.I2), 1.0, atol=1e-12)


@given(ids, ids)
@settings(max_examples=30, deadline=None)
def test_distance_is_symmetric(a, b):
    da, db = descriptors_from_cgpt(cached_cgpt(a)), descriptors_from_cgpt(cached_cgpt(b))
    assert descriptor_distance(da, db) == descriptor_distance(db, da)
    assert (descriptor_distance(da, db) == 0.0) == (a == b)
