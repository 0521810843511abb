import numpy as np
import pytest

from src.cohortdata import standardize_record
from src.diffkernel import ContractError, DimensionError, Tape
from src.genmodel import (
    decode,
    encode,
    guide,
    guide_logits,
    prior_params,
    reparameterize,
)
from src.genmodel.params import encoder_input_dim
from src.selftest import toy_model, toy_record


@pytest.fixture
def record():
    return toy_record("p0", 5, np.random.default_rng(11))


def test_patient_tensors_zero_fill_masked_cells(model, record):
    """Test masked cells reach the networks as zeros with their mask channel off"""
    inputs = model.tensors(record)
    C = model.schema.n_continuous

    assert inputs.encoder_inputs.shape == (5, encoder_input_dim(model.schema))
    assert np.all(inputs.cont_values[~record.mask_x[:, :C]] == 0.0)
    assert np.all(np.isfinite(inputs.encoder_inputs))
    assert inputs.context.shape == (5, 2)
    np.testing.assert_allclose(inputs.context[:, 0], record.times / 10.0)
    np.testing.assert_array_equal(inputs.y_mask, record.mask_y.astype(float))


def test_targets_are_relative_to_last_conditioned_visit(model, record):
    inputs = model.tensors(record)
    targets = inputs.targets(2)
    np.testing.assert_allclose(targets[:, 0], (record.times - record.times[1]) / 10.0)
    np.testing.assert_allclose(inputs.targets(0)[:, 0], record.times / 10.0)


def test_encode_shapes_and_range(model, record):
    inputs = model.tensors(record)
    tape = Tape(model.params)
    posterior = encode(tape, model.config, inputs, 3)

    assert posterior.mean.shape == (5, 4)
    assert np.all(posterior.sd_value > 0.0)
    with pytest.raises(ContractError, match="k=6 outside 0..5"):
        encode(tape, model.config, inputs, 6)


def test_encode_ignores_visits_after_k(model, record, rng):
    """Test the posterior conditioned on k visits never reads visit k or later"""
    x = record.x.copy()
    x[2:, :3] = rng.normal(size=(3, 3))
    x[2:, 3] = rng.integers(0, 3, size=3)
    changed = record.with_values(x=x)
    first = encode(Tape(model.params), model.config, model.tensors(record), 2)
    second = encode(Tape(model.params), model.config, model.tensors(changed), 2)

    np.testing.assert_array_equal(first.mean_value, second.mean_value)
    np.testing.assert_array_equal(first.sd_value, second.sd_value)


def test_reparameterize_stacks_draws(model, record, rng):
    tape = Tape(model.params)
    posterior = encode(tape, model.config, model.tensors(record), 5)
    noise = rng.standard_normal((3, 5, 4))

    z = reparameterize(tape, posterior, noise)

    assert z.shape == (15, 4)
    expected = posterior.mean_value + posterior.sd_value * noise[1]
    np.testing.assert_allclose(z.value[5:10], expected)
    with pytest.raises(DimensionError):
        reparameterize(tape, posterior, rng.standard_normal((5, 3)))


def test_deterministic_model_ignores_noise(record, rng):
    model = toy_model(probabilistic=False)
    tape = Tape(model.params)
    posterior = encode(tape, model.config, model.tensors(record), 2)

    z = reparameterize(tape, posterior, rng.standard_normal((5, 4)))

    assert posterior.sd is None
    np.testing.assert_array_equal(z.value, posterior.mean_value)
    assert not posterior.sd_value.any()


def test_decode_and_prior_shapes(model, record, rng):
    inputs = model.tensors(record)
    tape = Tape(model.params)
    z = tape.constant(rng.normal(size=(5, 4)))
    likelihood = decode(tape, model.config, model.schema, z, inputs.context)
    prior = prior_params(tape, model.config, inputs.context)

    assert likelihood.cont_mean.shape == (5, 3)
    assert np.all(likelihood.cont_sd_value >= model.config.sd_floor)
    assert len(likelihood.cat_probs) == 1
    np.testing.assert_allclose(likelihood.cat_probs[0].value.sum(axis=1), 1.0)
    assert prior.mean.shape == (5, 4)
    with pytest.raises(DimensionError, match="latent rows and context rows"):
        decode(tape, model.config, model.schema, z, inputs.context[:3])


def test_fixed_sigma_is_one(record, rng):
    model = toy_model(learn_sigma=False)
    tape = Tape(model.params)
    z = tape.constant(rng.normal(size=(5, 4)))
    context = model.tensors(record).context
    likelihood = decode(tape, model.config, model.schema, z, context)
    assert likelihood.cont_sd is None
    np.testing.assert_array_equal(likelihood.cont_sd_value, 1.0)


def test_guidance_reads_only_its_latent_columns(model, rng):
    """Test group logits have exactly zero gradient outside their latent columns"""
    context = rng.normal(size=(6, 2))
    for _ in range(100):
        z_value = rng.normal(size=(6, 4))
        for j, group in enumerate(model.config.partition.groups):
            tape = Tape({**model.params, "z": z_value})
            z = tape.param("z")
            logits = guide_logits(tape, model.config, model.schema, z, context)
            weights = tape.constant(rng.normal(size=logits[j].shape))
            grads = tape.backward(tape.sum(tape.mul(logits[j], weights)))

            outside = [i for i in range(4) if i not in group.latent_indices]
            assert not grads["z"][:, outside].any()


def test_unguided_concepts_have_no_head(record, rng):
    model = toy_model(partition={"groups": [{"group": "g2", "latent_indices": [2, 3]}]})
    tape = Tape(model.params)
    z = tape.constant(rng.normal(size=(5, 4)))
    probs = guide(tape, model.config, model.schema, z, model.tensors(record).context)

    assert probs[0] is None
    assert probs[1].shape == (5, 4)
    np.testing.assert_allclose(probs[1].value.sum(axis=1), 1.0)


def test_prior_moves_with_static_covariates(model, record):
    """Test changing s at fixed tau changes the prior moments"""
    context = model.tensors(record).context
    shifted = context.copy()
    shifted[:, 1:] += 1.5
    tape = Tape(model.params)
    base = prior_params(tape, model.config, context)
    moved = prior_params(tape, model.config, shifted)

    assert not np.allclose(base.mean_value, moved.mean_value)
    assert not np.allclose(base.sd_value, moved.sd_value)


@pytest.mark.slow
def test_trained_posterior_narrows_with_history(acceptance_run):
    """Test the last-visit posterior is wider before any visit is read than after all"""
    _, train_part, test_part, result = acceptance_run
    model = result.model
    records = (list(test_part) + list(train_part))[:150]
    unread, fully_read = [], []
    for record in records:
        inputs = model.tensors(standardize_record(record, model.scaler))
        tape = Tape(model.params)
        unread.append(encode(tape, model.config, inputs, 0).sd_value[-1].mean())
        full = encode(tape, model.config, inputs, inputs.T)
        fully_read.append(full.sd_value[-1].mean())

    assert np.mean(unread) > np.mean(fully_read)
