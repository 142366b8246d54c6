"""Tests for the reverse-mode tape."""

import numpy as np
import pytest

from weno_ds import autodiff as ad
from weno_ds.errors import TapeError
from weno_ds.weno_kernel import SchemeConfig, Weighting, interface_flux, tau5


def _rng():
    return np.random.default_rng(7)


def test_product_rule():
    tape = ad.Tape()
    x = tape.variable(3.0)
    y = tape.variable(4.0)
    gx, gy = tape.backward(x * y, [x, y])
    assert float(gx) == 4.0
    assert float(gy) == 3.0


def test_shared_subexpression_accumulates():
    tape = ad.Tape()
    x = tape.variable(2.0)
    z = x * x + x
    (g,) = tape.backward(z, [x])
    assert float(g) == pytest.approx(5.0)


def test_broadcast_adjoint_sums_back():
    tape = ad.Tape()
    x = tape.variable(np.arange(4.0))
    s = tape.variable(2.0)
    loss = ad.sum_(x * s)
    gx, gs = tape.backward(loss, [x, s])
    np.testing.assert_array_equal(gx, np.full(4, 2.0))
    assert float(gs) == pytest.approx(6.0)


def test_unreachable_variable_gets_zero_gradient():
    tape = ad.Tape()
    x = tape.variable(np.ones(3))
    unused = tape.variable(np.ones(2))
    (gx, gu) = tape.backward(ad.sum_(x), [x, unused])
    np.testing.assert_array_equal(gu, np.zeros(2))
    np.testing.assert_array_equal(gx, np.ones(3))


def test_non_scalar_loss_is_rejected():
    tape = ad.Tape()
    x = tape.variable(np.ones(3))
    with pytest.raises(TapeError):
        tape.backward(x * 2.0, [x])


def test_mixing_tapes_is_rejected():
    a = ad.Tape().variable(1.0)
    b = ad.Tape().variable(2.0)
    with pytest.raises(TapeError):
        a + b


def test_non_finite_forward_value_is_rejected():
    tape = ad.Tape()
    x = tape.variable(0.0)
    with pytest.raises(TapeError):
        1.0 / x


def test_leaf_must_be_finite():
    with pytest.raises(TapeError):
        ad.Tape().variable(np.array([1.0, np.inf]))


def test_only_small_integer_powers():
    x = ad.Tape().variable(2.0)
    assert float(ad.value_of(x ** 2)) == 4.0
    with pytest.raises(TapeError):
        x ** 3


def test_helpers_evaluate_without_tape():
    values = np.array([-1.0, 0.5, 2.0])
    np.testing.assert_allclose(ad.elu(values), [np.expm1(-1.0), 0.5, 2.0])
    np.testing.assert_allclose(ad.sigmoid(np.array([0.0])), [0.5])
    assert ad.sum_(values) == pytest.approx(1.5)
    np.testing.assert_array_equal(ad.take(values, np.array([2, 0])), [2.0, -1.0])


def test_maximum_ties_route_to_first_argument():
    tape = ad.Tape()
    a = tape.variable(np.array([1.0, 2.0]))
    b = tape.variable(np.array([1.0, 3.0]))
    ga, gb = tape.backward(ad.sum_(ad.maximum(a, b)), [a, b])
    np.testing.assert_array_equal(ga, [1.0, 0.0])
    np.testing.assert_array_equal(gb, [0.0, 1.0])


def test_abs_gradient_is_zero_at_zero():
    tape = ad.Tape()
    x = tape.variable(np.array([-2.0, 0.0, 3.0]))
    (g,) = tape.backward(ad.sum_(ad.absolute(x)), [x])
    np.testing.assert_array_equal(g, [-1.0, 0.0, 1.0])


def test_take_with_repeated_indices_scatters_adjoint():
    tape = ad.Tape()
    x = tape.variable(np.array([1.0, 2.0, 3.0]))
    gathered = ad.take(x, np.array([0, 0, 2, 0]))
    (g,) = tape.backward(ad.sum_(gathered), [x])
    np.testing.assert_array_equal(g, [3.0, 0.0, 1.0])


def test_einsum_rejects_ellipsis():
    with pytest.raises(ValueError):
        ad.einsum("...i,i->...", np.ones((2, 3)), np.ones(3))


@pytest.mark.parametrize("name, f", [
    ("elementwise", lambda p: ad.sum_(ad.exp(p[0]) * ad.sqrt(p[1]) - p[0] / p[1])),
    ("activations", lambda p: ad.sum_(ad.sigmoid(p[0]) * ad.elu(p[1] - 1.0))),
    ("stack", lambda p: ad.sum_(ad.square(ad.stack([p[0], p[1] * 2.0], axis=-1)))),
    ("concatenate", lambda p: ad.sum_(ad.concatenate([p[0], p[1]]) ** 2)),
    ("slices", lambda p: ad.sum_(p[0][1:] * p[1][:-1]) + ad.mean(p[0].reshape(2, 2))),
    ("einsum", lambda p: ad.sum_(ad.einsum("i,j->ij", p[0], p[1]) ** 2)),
])
def test_primitives_match_finite_differences(name, f):
    rng = _rng()
    params = [rng.normal(size=4), rng.uniform(0.5, 2.0, size=4)]
    assert ad.grad_check(f, params) < 1e-6, name


def test_conv1d_gradients_match_finite_differences():
    rng = _rng()
    x = rng.normal(size=(2, 9))
    params = [rng.normal(size=(3, 2, 3)), rng.normal(size=3)]

    def f(p):
        out = ad.conv1d(x, p[0], p[1])
        return ad.sum_(ad.sigmoid(out))

    assert ad.grad_check(f, params) < 1e-6


def test_conv1d_matches_direct_correlation():
    rng = _rng()
    x = rng.normal(size=(2, 7))
    w = rng.normal(size=(1, 2, 3))
    b = np.array([0.5])
    out = ad.conv1d(x, w, b)
    expected = [sum(w[0, c, k] * x[c, l + k] for c in range(2) for k in range(3)) + 0.5
                for l in range(5)]
    np.testing.assert_allclose(out[0], expected, rtol=1e-12)


def test_conv1d_input_gradient():
    rng = _rng()
    w = rng.normal(size=(2, 1, 3))
    b = np.zeros(2)
    assert ad.grad_check(lambda p: ad.sum_(ad.conv1d(p[0], w, b) ** 2),
                         [rng.normal(size=(1, 8))]) < 1e-6


def test_registry_lists_core_primitives():
    names = ad.primitive_names()
    for op in ("add", "mul", "conv1d", "einsum", "getitem", "sigmoid"):
        assert op in names


def test_recorded_values():
    tape = ad.Tape()
    assert float((tape.variable(2.0) * 3.0).value) == 6.0
    assert float(ad.sigmoid(tape.variable(0.0)).value) == 0.5
    assert float(ad.elu(tape.variable(-1.0)).value) == pytest.approx(np.exp(-1.0) - 1.0)


def test_simple_gradients():
    tape = ad.Tape()
    x = tape.variable(3.0)
    assert float(tape.backward(x ** 2, [x])[0]) == 6.0
    tape = ad.Tape()
    z = tape.variable(0.0)
    assert float(tape.backward(ad.sigmoid(z), [z])[0]) == 0.25


def test_quadratic_form_grad_check_is_tight():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])

    def f(p):
        x = p[0]
        return ad.sum_(x * ad.einsum("ij,j->i", a, x))

    assert ad.grad_check(f, [np.array([0.3, -1.2])]) < 1e-9


def test_weno_z_flux_gradient_matches_finite_differences():
    cfg = SchemeConfig(Weighting.Z)
    window = np.array([0.1, 0.4, 1.3, 0.8, 0.2])

    def f(p):
        w = p[0]
        return interface_flux(tuple(w[k] for k in range(5)), cfg)

    assert ad.grad_check(f, [window]) < 1e-5


def test_tau5_tie_gradient_is_finite():
    tape = ad.Tape()
    beta = [tape.variable(0.5), tape.variable(1.0), tape.variable(0.5)]
    grads = tape.backward(tau5(beta), beta)
    assert float(grads[0]) == 0.0
    assert float(grads[2]) == 0.0
    assert all(np.isfinite(g) for g in grads)


def test_gradient_is_linear():
    rng = _rng()
    x0 = rng.normal(size=5)

    def gradient(fn):
        tape = ad.Tape()
        x = tape.variable(x0)
        return tape.backward(fn(x), [x])[0]

    f = lambda x: ad.sum_(ad.sigmoid(x) * x)
    g = lambda x: ad.sum_(ad.exp(x * 0.5))
    combined = gradient(lambda x: 2.0 * f(x) - 3.0 * g(x))
    np.testing.assert_allclose(combined, 2.0 * gradient(f) - 3.0 * gradient(g), atol=1e-12)
