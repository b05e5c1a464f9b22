"""Activation registry: built-ins, custom registration, admissibility checks."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from manifold_diffusion.activations import make_activation


def test_builtin_values():
    y = np.array([-2.0, 0.0, 1.5])
    assert np.allclose(make_activation("linear")(y), y)
    assert np.allclose(make_activation("tanh")(y), np.tanh(y))
    assert np.allclose(make_activation("relu")(y), [0.0, 0.0, 1.5])
    assert np.allclose(make_activation("sigmoid")(y), 1.0 / (1.0 + np.exp(-y)))


def test_builtin_parity_flags():
    assert make_activation("linear").is_odd
    assert make_activation("tanh").is_odd
    assert not make_activation("relu").is_odd
    assert not make_activation("sigmoid").is_odd


@given(st.floats(min_value=-10.0, max_value=10.0),
       st.sampled_from(["linear", "tanh"]))
def test_odd_builtins_are_odd(y, kind):
    phi = make_activation(kind)
    assert phi(-y) == pytest.approx(-phi(y), abs=1e-12)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown activation"):
        make_activation("swish")


def test_custom_requires_callable():
    with pytest.raises(ValueError, match="callable"):
        make_activation("custom")


def test_custom_cubic_registers_as_odd():
    phi = make_activation("custom", fn=lambda y: y**3, is_odd=True)
    assert phi.is_odd
    assert phi(2.0) == 8.0


def test_custom_rejects_false_odd_claim():
    with pytest.raises(ValueError, match="declared odd"):
        make_activation("custom", fn=lambda y: np.maximum(y, 0.0), is_odd=True)


def test_custom_rejects_superpolynomial_growth():
    with pytest.raises(ValueError, match="polynomial growth"):
        make_activation("custom", fn=lambda y: np.exp(np.abs(y)))


def test_custom_rejects_non_finite():
    with pytest.raises(ValueError, match="finite"):
        make_activation("custom", fn=lambda y: np.where(y > 0, np.inf, y))


def test_activation_casts_input_to_float_array():
    phi = make_activation("linear")
    out = phi([1, 2, 3])
    assert out.dtype == np.float64
