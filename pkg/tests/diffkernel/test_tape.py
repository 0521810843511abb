import numpy as np
import pytest

from src.diffkernel import (
    ContractError,
    DimensionError,
    NonFiniteError,
    Tape,
    finite_difference_check,
)


def test_backward_product_and_sum():
    """Test gradients of sum(a * b) are the swapped operands"""
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([4.0, -1.0, 0.5])
    tape = Tape({"a": a, "b": b})
    loss = tape.sum(tape.mul(tape.param("a"), tape.param("b")))

    grads = tape.backward(loss)

    assert loss.item() == pytest.approx(4.0 - 2.0 + 1.5)
    np.testing.assert_array_equal(grads["a"], b)
    np.testing.assert_array_equal(grads["b"], a)


def test_backward_reused_node_accumulates():
    """Test a node used twice receives both contributions"""
    tape = Tape({"x": np.array([3.0])})
    x = tape.param("x")
    loss = tape.sum(tape.add(tape.square(x), x))

    grads = tape.backward(loss)

    assert grads["x"][0] == pytest.approx(7.0)


def test_backward_untouched_parameter_gets_zeros():
    """Test parameters absent from the loss get zero gradients of the right shape"""
    tape = Tape({"used": np.ones(2), "unused": np.ones((2, 3))})
    grads = tape.backward(tape.sum(tape.param("used")))

    assert grads["unused"].shape == (2, 3)
    assert not grads["unused"].any()


def test_broadcast_bias_gradient_is_summed():
    """Test a bias broadcast over rows receives the column sums"""
    tape = Tape({"b": np.zeros(2)})
    rows = tape.constant(np.arange(6.0).reshape(3, 2))
    loss = tape.sum(tape.add(rows, tape.param("b")))

    grads = tape.backward(loss)

    np.testing.assert_array_equal(grads["b"], [3.0, 3.0])


def test_log_floor_blocks_gradient():
    """Test ln is floored and the floored entries pass no gradient"""
    tape = Tape({"p": np.array([0.0, 0.5])})
    out = tape.log(tape.param("p"), floor=1e-12)
    grads = tape.backward(tape.sum(out))

    assert out.value[0] == pytest.approx(np.log(1e-12))
    np.testing.assert_allclose(grads["p"], [0.0, 2.0])


@pytest.mark.parametrize("kind", ["relu", "sigmoid", "tanh", "softplus"])
def test_activation_gradients_match_finite_differences(kind):
    """Test every activation against central differences"""
    params = {"x": np.array([-1.3, -0.2, 0.4, 2.1])}

    def objective(tape):
        return tape.sum(tape.square(tape.activation(kind, tape.param("x"))))

    assert finite_difference_check(objective, params) < 1e-6


def test_softmax_rows_and_gradient():
    """Test softmax rows sum to one and its gradient is exact"""
    params = {"logits": np.array([[0.1, 2.0, -1.0], [5.0, 5.0, 5.0]])}
    weights = np.array([[1.0, -2.0, 0.5], [0.3, 0.0, 1.0]])
    tape = Tape(params)
    probs = tape.softmax(tape.param("logits"))

    np.testing.assert_allclose(probs.value.sum(axis=1), 1.0)
    np.testing.assert_allclose(probs.value[1], 1.0 / 3.0)

    def objective(t):
        return t.sum(t.mul(t.softmax(t.param("logits")), t.constant(weights)))

    assert finite_difference_check(objective, params) < 1e-6


def test_affine_concat_columns_pick_gradients():
    """Test the shape plumbing primitives against central differences"""
    rng = np.random.default_rng(0)
    params = {
        "W": rng.normal(size=(3, 4)),
        "b": rng.normal(size=3),
        "x": rng.normal(size=(2, 4)),
    }

    def objective(tape):
        h = tape.affine(tape.param("W"), tape.param("b"), tape.param("x"))
        wide = tape.concat([h, tape.tile_rows(tape.param("b"), 2)], axis=-1)
        picked = tape.pick(wide, np.array([0, 1, 1]), np.array([4, 0, 5]))
        return tape.add(
            tape.sum(tape.square(tape.columns(wide, np.array([0, 2])))),
            tape.sum(picked),
        )

    assert finite_difference_check(objective, params) < 1e-6


@pytest.mark.parametrize("seed", range(100))
def test_random_graph_gradients(seed):
    """Test a graph over every primitive against central differences at random inputs"""
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(3, 4))
    params = {
        "a": rng.normal(size=(3, 4)),
        "b": rng.normal(size=(3, 4)),
        "r": rng.uniform(0.1, 1.0, size=(3, 4)) * signs,
        "W": rng.normal(size=(2, 4)),
        "bias": rng.normal(size=2),
    }
    coef = np.random.default_rng(seed + 1).normal(size=(3, 5))
    rows, cols = np.array([0, 2, 1]), np.array([1, 0, 15])

    def objective(tape):
        a, b = tape.param("a"), tape.param("b")
        positive = tape.shift(tape.square(b), 0.5)
        mixed = tape.div(tape.mul(tape.sub(a, b), tape.add(a, b)), positive)
        logged = tape.log(tape.shift(tape.square(a), 0.5))
        acts = tape.concat(
            [
                tape.activation(kind, tape.scale(mixed, 0.5))
                for kind in ("sigmoid", "tanh", "softplus")
            ]
            + [tape.activation("relu", tape.param("r"))],
            axis=-1,
        )
        hidden = tape.affine(tape.param("W"), tape.param("bias"), logged)
        probs = tape.softmax(
            tape.concat([hidden, tape.columns(acts, np.array([0, 5, 15]))], axis=-1)
        )
        tiled = tape.tile_rows(tape.param("bias"), 3)
        terms = [
            tape.sum(tape.mul(probs, tape.constant(coef))),
            tape.scale(tape.sum(tape.square(acts)), 0.1),
            tape.sum(tape.pick(acts, rows, cols)),
            tape.sum(tape.mul(tiled, hidden)),
            tape.sum(logged),
        ]
        total = terms[0]
        for term in terms[1:]:
            total = tape.add(total, term)
        return total

    error = finite_difference_check(
        objective, params, max_entries_per_param=6, rng=np.random.default_rng(seed)
    )
    assert error < 1e-5


def test_softmax_shift_invariance(rng):
    """Test adding a per-row constant leaves softmax unchanged, even at large logits"""
    logits = rng.normal(scale=10.0, size=(4, 5))
    shifts = rng.normal(scale=100.0, size=(4, 1))
    tape = Tape()
    base = tape.softmax(tape.constant(logits)).value
    moved = tape.softmax(tape.constant(logits + shifts)).value

    np.testing.assert_allclose(moved, base, atol=1e-12)
    np.testing.assert_allclose(base.sum(axis=1), 1.0, atol=1e-12)
    extreme = tape.softmax(tape.constant(np.array([1000.0, 0.0]))).value
    np.testing.assert_allclose(extreme, [1.0, 0.0], atol=1e-12)


def test_non_finite_value_is_rejected():
    """Test NaN reaching a node raises NonFiniteError"""
    tape = Tape()
    with pytest.raises(NonFiniteError, match="Non-finite"):
        tape.constant([1.0, np.nan])


def test_division_by_zero_is_rejected():
    tape = Tape()
    with pytest.raises(NonFiniteError):
        tape.div(tape.constant([1.0]), tape.constant([0.0]))


def test_affine_shape_mismatch():
    """Test affine rejects a weight matrix that does not conform"""
    tape = Tape()
    with pytest.raises(DimensionError, match="affine"):
        tape.affine(tape.constant(np.ones((2, 3))), None, tape.constant(np.ones(4)))


def test_backward_requires_scalar():
    tape = Tape({"x": np.ones(3)})
    with pytest.raises(ContractError, match="scalar"):
        tape.backward(tape.param("x"))


def test_unknown_parameter():
    tape = Tape({"x": np.ones(1)})
    with pytest.raises(ContractError, match="Unknown parameter"):
        tape.param("y")


def test_softmax_needs_two_classes():
    tape = Tape()
    with pytest.raises(ContractError):
        tape.softmax(tape.constant([[1.0]]))


def test_dropout_identity_without_generator():
    """Test dropout is a no-op in evaluation mode"""
    tape = Tape()
    x = tape.constant(np.ones(5))
    assert tape.dropout(x, 0.5, None) is x


def test_gradcheck_rejects_bad_step():
    with pytest.raises(ContractError, match="finite difference step"):
        finite_difference_check(lambda t: t.constant(0.0), {}, h=1.0)
