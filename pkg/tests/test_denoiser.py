import numpy as np
import pytest
from pydantic import ValidationError

from stylereweight.attention.kernels import attend
from stylereweight.denoiser.builder import ToyDenoiserBuilder
from stylereweight.denoiser.config import ToyDenoiserConfig
from stylereweight.denoiser.taps import FeatureTaps
from stylereweight.denoiser.textures import (
    make_texture_dataset,
    make_translating_stripes_clip,
    stripes,
)
from stylereweight.denoiser.toy_denoiser import patchify, unpatchify
from stylereweight.denoiser.training import train
from stylereweight.denoiser.weights_io import load_weights, save_weights
from stylereweight.diffusion.schedule import make_schedule
from stylereweight.errors import ConfigError, ContractError, DomainError, ImageFormatError, TrainingError


def _tiny_builder():
    return (ToyDenoiserBuilder()
            .with_image(8)
            .with_patch_size(4)
            .with_blocks(2, 8)
            .with_steps(5)
    )


def test_config_derived_sizes():
    config = ToyDenoiserConfig()
    assert config.grid_size == 4
    assert config.num_tokens == 16
    assert config.patch_dim == 16
    assert config.hidden_dim == 64
    assert config.decoder_blocks == (2, 3)


def test_config_rejects_indivisible_patches():
    with pytest.raises(ValidationError):
        ToyDenoiserConfig(image_size=10, patch_size=4)


def test_patchify_round_trip(rng):
    image = rng.standard_normal((8, 12, 3))
    tokens = patchify(image, 4)
    assert tokens.shape == (6, 48)
    np.testing.assert_array_equal(unpatchify(tokens, 4, 8, 12, 3), image)


def test_forward_keeps_the_input_shape(small_denoiser, rng):
    x_t = rng.standard_normal((8, 8, 1))
    assert small_denoiser(x_t, 3).shape == x_t.shape


def test_forward_rejects_bad_inputs(small_denoiser, rng):
    with pytest.raises(ConfigError):
        small_denoiser(rng.standard_normal((6, 6, 1)), 1)
    with pytest.raises(ConfigError):
        small_denoiser(rng.standard_normal((8, 8)), 1)
    with pytest.raises(DomainError):
        small_denoiser(rng.standard_normal((8, 8, 1)), 7)


def test_self_attention_override_is_bit_identical(small_denoiser, rng):
    x_t = rng.standard_normal((8, 8, 1))
    overrides = {block: attend for block in range(small_denoiser.config.depth)}
    np.testing.assert_array_equal(small_denoiser(x_t, 4, overrides=overrides), small_denoiser(x_t, 4))


def test_taps_reproduce_attention_outputs(small_denoiser, rng):
    taps = FeatureTaps()
    small_denoiser(rng.standard_normal((8, 8, 1)), 2, taps=taps)
    assert len(taps) == small_denoiser.config.depth
    for block in range(small_denoiser.config.depth):
        tap = taps.get(2, block)
        np.testing.assert_allclose(tap.inputs.attend(), tap.output, atol=1e-12)
    with pytest.raises(KeyError):
        taps.get(3, 0)


def test_taps_only_record_wanted_blocks(small_denoiser, rng):
    taps = FeatureTaps(blocks=[1])
    small_denoiser(rng.standard_normal((8, 8, 1)), 2, taps=taps)
    assert list(taps.keys()) == [(2, 1)]
    assert (2, 0) not in taps


def test_override_contract_violations(small_denoiser, rng):
    x_t = rng.standard_normal((8, 8, 1))
    with pytest.raises(ContractError):
        small_denoiser(x_t, 1, overrides={0: lambda q, k, v: v[:1]})
    with pytest.raises(ContractError):
        small_denoiser(x_t, 1, overrides={9: attend})


def test_zero_network_predicts_the_output_bias(rng):
    denoiser = _tiny_builder().with_zero_weights().build()
    denoiser.weights.b_out = np.arange(16, dtype=np.float64) / 10.0
    expected = unpatchify(np.tile(denoiser.weights.b_out, (4, 1)), 4, 8, 8, 1)
    for _ in range(3):
        np.testing.assert_array_equal(denoiser(rng.standard_normal((8, 8, 1)), 2), expected)


def test_builder_needs_a_seed_for_random_weights():
    with pytest.raises(ValueError):
        _tiny_builder().build()


def test_gradients_match_finite_differences(rng):
    denoiser = _tiny_builder().with_seed(1).build()
    x_t, noise, t = rng.standard_normal((8, 8, 1)), rng.standard_normal((8, 8, 1)), 3
    _, grads = denoiser.loss_and_gradients(x_t, t, noise)

    params = dict(denoiser.weights.named_arrays())
    grad_arrays = dict(grads.named_arrays())
    step = 1e-6
    for name in ("w_in", "time_embedding", "blocks.0.wq", "blocks.0.wk", "blocks.1.wv", "blocks.1.w1", "w_out"):
        parameter, gradient = params[name], grad_arrays[name]
        index = np.unravel_index(np.argmax(np.abs(gradient)), gradient.shape)
        original = parameter[index]
        parameter[index] = original + step
        loss_plus, _ = denoiser.loss_and_gradients(x_t, t, noise)
        parameter[index] = original - step
        loss_minus, _ = denoiser.loss_and_gradients(x_t, t, noise)
        parameter[index] = original
        numeric = (loss_plus - loss_minus) / (2 * step)
        assert abs(numeric - gradient[index]) <= 1e-4 * max(abs(numeric), abs(gradient[index])), name


def test_zero_learning_rate_leaves_weights_unchanged():
    schedule = make_schedule(5)
    start = _tiny_builder().with_seed(2).build()
    dataset = make_texture_dataset(["stripes"], 2, 8, seed=0)
    trained = train(dataset, schedule, epochs=1, lr=0.0, denoiser=start)
    for (_, before), (_, after) in zip(start.weights.named_arrays(), trained.weights.named_arrays()):
        np.testing.assert_array_equal(before, after)
    assert len(trained.loss_history) == 1


def test_training_is_deterministic():
    schedule = make_schedule(5)
    dataset = make_texture_dataset(["stripes", "dots"], 4, 8, seed=1)
    config = ToyDenoiserConfig(image_size=8, patch_size=4, embed_dim=8, depth=2, steps=5)
    first = train(dataset, schedule, epochs=3, seed=4, config=config)
    second = train(dataset, schedule, epochs=3, seed=4, config=config)
    for (_, a), (_, b) in zip(first.weights.named_arrays(), second.weights.named_arrays()):
        np.testing.assert_array_equal(a, b)
    assert first.loss_history == second.loss_history


def test_training_lowers_the_loss(trained_denoiser):
    history = trained_denoiser.loss_history
    assert min(history[1:]) < history[0]


def test_divergent_training_reports_its_epoch():
    schedule = make_schedule(5)
    dataset = make_texture_dataset(["stripes"], 2, 8, seed=0)
    config = ToyDenoiserConfig(image_size=8, patch_size=4, embed_dim=8, depth=2, steps=5)
    with pytest.raises(TrainingError) as caught:
        train(dataset, schedule, epochs=30, lr=1e8, config=config)
    assert 0 <= caught.value.epoch < 30


def test_training_rejects_mismatched_steps():
    dataset = make_texture_dataset(["stripes"], 1, 8, seed=0)
    with pytest.raises(ConfigError):
        train(dataset, make_schedule(4), epochs=1, denoiser=_tiny_builder().with_seed(0).build())


def test_training_rejects_empty_dataset():
    with pytest.raises(DomainError):
        train([], make_schedule(5), epochs=1)


def test_texture_dataset_is_seeded():
    first = make_texture_dataset(n=6, seed=3)
    second = make_texture_dataset(n=6, seed=3)
    assert len(first) == 6
    for a, b in zip(first, second):
        assert a.shape == (16, 16, 1)
        assert a.min() >= 0.0 and a.max() <= 1.0
        np.testing.assert_array_equal(a, b)
    assert make_texture_dataset(n=0) == []


def test_texture_dataset_rejects_unknown_kinds():
    with pytest.raises(ConfigError):
        make_texture_dataset(["plaid"], 2)
    with pytest.raises(ConfigError):
        make_texture_dataset(["stripes"], 2, size=10, patch_size=4)


def test_stripes_have_the_requested_period():
    profile = stripes(16, 4)[:, 0, 0]
    spectrum = np.abs(np.fft.rfft(profile - profile.mean()))
    assert int(np.argmax(spectrum)) == 16 // 4
    np.testing.assert_allclose(np.roll(profile, 4), profile, atol=1e-12)


def test_translating_clip_moves_each_frame():
    clip = make_translating_stripes_clip(frames=3, size=16, period=8, shift=1.0)
    assert len(clip) == 3
    np.testing.assert_allclose(clip[1][:, :-1], clip[0][:, 1:], atol=1e-12)


def test_weights_file_round_trip(tmp_path, small_denoiser, rng):
    path = tmp_path / "toy.ztoy"
    save_weights(path, small_denoiser)
    restored = load_weights(path)
    assert restored.config == small_denoiser.config
    for (name, a), (_, b) in zip(small_denoiser.weights.named_arrays(), restored.weights.named_arrays()):
        np.testing.assert_array_equal(a, b, err_msg=name)
    x_t = rng.standard_normal((8, 8, 1))
    np.testing.assert_array_equal(restored(x_t, 2), small_denoiser(x_t, 2))


def test_weights_file_with_wrong_magic(tmp_path):
    path = tmp_path / "bad.ztoy"
    path.write_bytes(b"ZTEN 1 1\n" + bytes(8))
    with pytest.raises(ImageFormatError):
        load_weights(path)
