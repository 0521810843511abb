import numpy as np
import pytest

from src.diffkernel import (
    AdamState,
    DimensionError,
    LSTMWeights,
    NonFiniteError,
    Tape,
    adam_step,
    dense,
    finite_difference_check,
    init_dense,
    init_lstm,
    lstm_step,
)


@pytest.fixture
def lstm_params():
    params = {}
    rng = np.random.default_rng(0)
    init_lstm(params, "enc", n_in=3, hidden=4, rng=rng)
    init_dense(params, "head", n_in=4, n_out=2, rng=rng)
    return params


def test_init_shapes_and_forget_bias(lstm_params):
    """Test gate weights are stacked four-high and the forget bias starts at one"""
    assert lstm_params["enc.W_x"].shape == (16, 3)
    assert lstm_params["enc.W_h"].shape == (16, 4)
    np.testing.assert_array_equal(lstm_params["enc.b"][4:8], 1.0)
    np.testing.assert_array_equal(lstm_params["enc.b"][:4], 0.0)
    assert lstm_params["head.W"].shape == (2, 4)


def test_zero_dense_init():
    params = {}
    init_dense(params, "out", 3, 2, np.random.default_rng(0), zero=True)
    assert not params["out.W"].any()
    assert not params["out.b"].any()


def test_lstm_gradients(lstm_params):
    """Test a three-step LSTM followed by a dense head against central differences"""
    inputs = np.random.default_rng(1).normal(size=(3, 3))

    def objective(tape):
        weights = LSTMWeights.bind(tape, "enc")
        h = c = tape.constant(np.zeros(4))
        for row in inputs:
            h, c = lstm_step(tape, weights, tape.constant(row), h, c)
        return tape.sum(tape.square(dense(tape, "head", h, "tanh")))

    assert finite_difference_check(objective, lstm_params) < 1e-6


def test_lstm_zero_weights_closed_form():
    """Test all gates sit at one half and the candidate at zero when weights vanish"""
    params = {
        "enc.W_x": np.zeros((4, 2)),
        "enc.W_h": np.zeros((4, 1)),
        "enc.b": np.zeros(4),
    }
    tape = Tape(params)
    weights = LSTMWeights.bind(tape, "enc")
    x = tape.constant(np.array([3.0, -7.0]))

    h, c = lstm_step(
        tape, weights, x, tape.constant(np.zeros(1)), tape.constant(np.ones(1))
    )
    assert c.value[0] == pytest.approx(0.5)
    assert h.value[0] == pytest.approx(0.5 * np.tanh(0.5))
    assert h.value[0] == pytest.approx(0.23106, abs=1e-5)

    h, c = lstm_step(
        tape, weights, x, tape.constant(np.zeros(1)), tape.constant(np.zeros(1))
    )
    assert c.value[0] == 0.0
    assert h.value[0] == 0.0


def test_lstm_rejects_wrong_state_width(lstm_params):
    tape = Tape(lstm_params)
    weights = LSTMWeights.bind(tape, "enc")
    with pytest.raises(DimensionError, match="hidden width"):
        lstm_step(
            tape,
            weights,
            tape.constant(np.zeros(3)),
            tape.constant(np.zeros(5)),
            tape.constant(np.zeros(4)),
        )


def test_adam_first_step_moves_by_learning_rate():
    """Test the bias-corrected first step is lr * sign(g)"""
    params = {"w": np.array([1.0, -1.0, 0.5])}
    state = AdamState.for_parameters(params, lr=0.01)
    grads = {"w": np.array([2.0, -0.5, 1e-3])}

    new_params, new_state = adam_step(state, params, grads)

    expected = params["w"] - 0.01 * np.sign(grads["w"])
    np.testing.assert_allclose(new_params["w"], expected, rtol=1e-4)
    assert new_state.step == 1
    np.testing.assert_array_equal(params["w"], [1.0, -1.0, 0.5])


def test_adam_rejects_non_finite_gradient():
    params = {"w": np.ones(2)}
    state = AdamState.for_parameters(params)
    with pytest.raises(NonFiniteError, match="update rejected"):
        adam_step(state, params, {"w": np.array([np.inf, 0.0])})


def test_adam_rejects_mismatched_gradient():
    params = {"w": np.ones(2)}
    with pytest.raises(DimensionError):
        adam_step(AdamState.for_parameters(params), params, {"w": np.ones(3)})


def test_adam_minimizes_quadratic():
    """Test repeated steps drive a convex quadratic to its minimum"""
    target = np.array([0.3, -1.2])
    params = {"w": np.zeros(2)}
    state = AdamState.for_parameters(params, lr=0.05)
    for _ in range(2000):
        params, state = adam_step(state, params, {"w": 2.0 * (params["w"] - target)})
    np.testing.assert_allclose(params["w"], target, atol=1e-2)
