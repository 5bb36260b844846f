import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from flrw_ode.errors import SingularityError
from flrw_ode.nonlinearity import (
    NonlinearityKind,
    NonlinearitySpec,
    eval_f,
    lipschitz_bound_scalar,
    lipschitz_bound_vector,
    norm,
)


def test_vector_examples():
    assert np.array_equal(eval_f(NonlinearitySpec(1.0, 3.0), [2.0, 0.0]), [8.0, 0.0])
    assert np.array_equal(eval_f(NonlinearitySpec(2.5, 1.7), np.zeros(3)), np.zeros(3))
    gm = 1.327e11
    Y = np.array([1.2e8, -0.5e8, 0.0])
    got = eval_f(NonlinearitySpec(gm, -2.0), Y)
    assert np.allclose(got, gm * Y / np.linalg.norm(Y) ** 3, rtol=1e-14)


def test_singular_origin():
    with pytest.raises(SingularityError):
        eval_f(NonlinearitySpec(1.0, -2.0), [0.0, 0.0])
    with pytest.raises(SingularityError):
        eval_f(NonlinearitySpec(1.0, 0.5, NonlinearityKind.POWER_SCALAR), [0.0])


def test_scalar_form():
    f = eval_f(NonlinearitySpec(-2.0, 2.0, "scalar"), [3.0])
    assert f.tolist() == [-18.0]
    batch = eval_f(NonlinearitySpec(1.0, 3.0, "scalar"), [[1.0], [-2.0]])
    assert batch[:, 0].tolist() == [1.0, 8.0]


def test_lipschitz_examples():
    lhs, rhs = lipschitz_bound_vector([1.0, 0.0], [0.0, 0.0], 2.0)
    assert (float(lhs), float(rhs)) == (1.0, 2.0)
    lhs, rhs = lipschitz_bound_vector([0.3, 0.4], [0.3, 0.4], 3.0)
    assert (float(lhs), float(rhs)) == (0.0, 0.0)
    lhs, rhs = lipschitz_bound_scalar([3.0], [1.0], 2.0)
    assert (float(lhs), float(rhs)) == (8.0, 12.0)
    lhs, rhs = lipschitz_bound_scalar([2.0], [2.0], 2.5)
    assert (float(lhs), float(rhs)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        lipschitz_bound_vector([1.0], [0.0], 1.0)


def _moderate(lo, hi):
    # squares of tiny entries underflow and break the relative identities
    return st.floats(lo, hi).filter(lambda x: x == 0 or abs(x) > 1e-25)


vec = hnp.arrays(np.float64, st.integers(1, 4).map(lambda n: (n,)), elements=_moderate(-10, 10))


@settings(max_examples=300, deadline=None)
@given(vec, st.floats(0.1, 5.0), st.floats(1.05, 5.0), st.sampled_from(list(NonlinearityKind)))
def test_scale_covariance(Y, c, p, kind):
    spec = NonlinearitySpec(1.3, p, kind)
    lhs = eval_f(spec, c * Y)
    rhs = c**p * eval_f(spec, Y)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


@settings(max_examples=300, deadline=None)
@given(vec, _moderate(-3, 3), st.floats(1.05, 5.0))
def test_vector_form_potential_identity(Y, lam, p):
    spec = NonlinearitySpec(lam, p)
    f = eval_f(spec, Y)
    r = float(norm(Y))
    assert float(Y @ f) == pytest.approx(lam * r ** (p + 1), rel=1e-12, abs=1e-300)
    assert float(norm(f)) == pytest.approx(abs(lam) * r**p, rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.floats(1.0001, 5.0))
def test_lipschitz_vector_property(Y, Z, p):
    if Y.shape != Z.shape:
        Z = np.resize(Z, Y.shape)
    lhs, rhs = lipschitz_bound_vector(Y, Z, p)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300
