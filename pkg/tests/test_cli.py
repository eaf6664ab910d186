import io

import numpy as np
import pytest
from PIL import Image
from pydantic import ValidationError

from stylereweight.cli.config_file import parse_config_text
from stylereweight.cli.image_io import decode_image, encode_image, list_frames, read_image, read_mask, write_image
from stylereweight.cli.main import main, parse_args
from stylereweight.errors import ConfigError, DimensionError, ImageFormatError
from stylereweight.numerics.linalg import MASK_SENTINEL
from stylereweight.pipeline.diagnostics import parse_diagnostics_csv

TRAIN_ARGS = [
    "train-toy-denoiser", "--size", "8", "--patch", "4", "--embed-dim", "8", "--depth", "2",
    "--epochs", "2", "--count", "2", "--steps", "6",
]


@pytest.fixture
def weights_path(tmp_path):
    path = tmp_path / "toy.ztoy"
    assert main(TRAIN_ARGS + ["--out", str(path)]) == 0
    return path


@pytest.fixture
def images(tmp_path):
    rng = np.random.default_rng(9)
    paths = {}
    for name in ("content", "style"):
        paths[name] = tmp_path / f"{name}.pgm"
        write_image(paths[name], rng.uniform(0, 1, (8, 8, 1)))
    return paths


def test_no_arguments_is_a_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_a_usage_error(capsys):
    assert main(["stylize", "--bogus"]) == 2
    assert "stylereweight: usage-error:" in capsys.readouterr().err


def test_lambda_flag():
    config = parse_args(["stylize", "--content", "c", "--style", "s", "--weights", "w", "--out", "o", "--lambda", "1.2"])
    assert config.style_scale == 1.2
    assert config.style == ("s",)
    assert config.window == (5, 30)


def test_sain_mean_and_clipping_flags():
    base = ["stylize", "--content", "c", "--style", "s", "--weights", "w", "--out", "o"]
    config = parse_args(base + ["--sain", "mean"])
    assert config.sain == "mean"
    assert config.injection_config().sain == "mean"
    assert config.injection_config().clip_range == (0.0, 1.0)
    assert parse_args(base + ["--no-clip"]).injection_config().clip_range is None


def test_inverted_window_is_a_config_error(capsys):
    argv = ["stylize", "--content", "c", "--style", "s", "--weights", "w", "--out", "o", "--window", "40:30"]
    with pytest.raises(ValidationError, match="not a valid range"):
        parse_args(argv)
    assert main(argv) == 2
    assert "stylereweight: config-error:" in capsys.readouterr().err


def test_missing_paths_are_config_errors():
    with pytest.raises(ValidationError, match="--weights"):
        parse_args(["stylize", "--content", "c", "--style", "s", "--out", "o"])


def test_config_file_is_overridden_by_flags(tmp_path):
    config_path = tmp_path / "run.cfg"
    config_path.write_text(
        "# shared settings\nlambda = 0.7\nwindow = 2:10\nblocks = 3,1\nramp-floor = -20\nstyle = s.pgm\n",
        encoding="utf-8",
    )
    config = parse_args(
        ["stylize", "--config", str(config_path), "--content", "c", "--weights", "w", "--out", "o", "--lambda", "0.9"]
    )
    assert config.style_scale == 0.9
    assert config.window == (2, 10)
    assert config.blocks == (3, 1)
    assert config.ramp_floor == -20.0
    assert config.injection_config().block_set == (1, 3)


def test_config_file_rejects_unknown_keys(tmp_path):
    config_path = tmp_path / "run.cfg"
    config_path.write_text("colour = red\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        parse_args(["train-toy-denoiser", "--config", str(config_path), "--out", "w"])


def test_config_text_errors_name_the_line():
    with pytest.raises(ConfigError, match="run.cfg:2"):
        parse_config_text("lambda = 1\nwindow\n", source="run.cfg")
    assert parse_config_text("--guidance-weight = 0.1") == {"guidance_weight": "0.1"}


def test_decode_single_white_pixel():
    np.testing.assert_array_equal(decode_image(b"P5\n1 1\n255\n\xff"), np.ones((1, 1, 1)))


def test_decode_skips_header_comments():
    image = decode_image(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    np.testing.assert_array_equal(image[:, :, 0], [[0.0, 1.0]])


def test_encoder_matches_pillow_byte_for_byte(rng):
    pixels = rng.integers(0, 256, (3, 5, 3), dtype=np.uint8)
    for array in (pixels, pixels[:, :, 0]):
        buffer = io.BytesIO()
        Image.fromarray(array).save(buffer, format="PPM")
        assert encode_image(array.astype(np.float64) / 255.0) == buffer.getvalue()


def test_pillow_reads_what_we_write(tmp_path, rng):
    image = rng.uniform(0, 1, (4, 6, 3))
    write_image(tmp_path / "out.ppm", image)
    with Image.open(tmp_path / "out.ppm") as reopened:
        pixels = np.asarray(reopened, dtype=np.float64) / 255.0
    assert np.max(np.abs(pixels - image)) <= 0.5 / 255.0 + 1e-12


def test_write_then_read_is_within_one_level(tmp_path, rng):
    image = rng.uniform(-0.2, 1.2, (4, 4, 1))
    write_image(tmp_path / "out.pgm", image)
    restored = read_image(tmp_path / "out.pgm")
    assert np.max(np.abs(restored - np.clip(image, 0, 1))) <= 1.0 / 255.0


def test_format_errors_carry_offsets(tmp_path):
    with pytest.raises(ImageFormatError) as caught:
        decode_image(b"P3\n1 1\n255\n0")
    assert caught.value.offset == 0

    with pytest.raises(ImageFormatError) as caught:
        decode_image(b"P5\n2 2\n255\n\x00\x01")
    assert caught.value.offset == 13

    with pytest.raises(ImageFormatError) as caught:
        decode_image(b"P5\n2 x\n255\n")
    assert caught.value.offset == 5

    with pytest.raises(ImageFormatError):
        decode_image(b"P5\n1 1\n65535\n\x00\x00")

    (tmp_path / "short.pgm").write_bytes(b"P5\n2 2\n255\n\x00\x01")
    with pytest.raises(ImageFormatError) as caught:
        read_image(tmp_path / "short.pgm")
    assert caught.value.offset == 13
    assert "short.pgm" in str(caught.value)


def test_encode_rejects_two_channels():
    with pytest.raises(DimensionError):
        encode_image(np.zeros((2, 2, 2)))


def test_mask_is_averaged_per_patch(tmp_path):
    mask = np.zeros((8, 8, 1))
    mask[:, :4] = 1.0
    write_image(tmp_path / "mask.pgm", mask)
    style_mask = read_mask(tmp_path / "mask.pgm", grid_size=2)
    np.testing.assert_array_equal(style_mask.offsets, [0.0, MASK_SENTINEL, 0.0, MASK_SENTINEL])
    with pytest.raises(DimensionError):
        read_mask(tmp_path / "mask.pgm", grid_size=3)


def test_frames_are_listed_in_name_order(tmp_path):
    for name in ("f002.pgm", "f000.pgm", "notes.txt", "f001.pgm"):
        (tmp_path / name).write_bytes(b"")
    assert [path.name for path in list_frames(tmp_path)] == ["f000.pgm", "f001.pgm", "f002.pgm"]


def test_stylize_twice_is_byte_identical(tmp_path, weights_path, images):
    outputs = []
    for index in range(2):
        out = tmp_path / f"out{index}.pgm"
        code = main([
            "stylize", "--content", str(images["content"]), "--style", str(images["style"]),
            "--weights", str(weights_path), "--out", str(out), "--window", "0:6",
            "--diag", str(tmp_path / f"diag{index}.csv"),
        ])
        assert code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert (tmp_path / "diag0.csv").read_text() == (tmp_path / "diag1.csv").read_text()
    assert len((tmp_path / "diag0.csv").read_text().splitlines()) == 7


def test_diagnose_identical_images(tmp_path, weights_path, images, capsys):
    diag = tmp_path / "diag.csv"
    code = main([
        "diagnose", "--content", str(images["content"]), "--style", str(images["content"]),
        "--weights", str(weights_path), "--diag", str(diag),
        "--lambda", "1", "--sain", "off", "--window", "0:6",
    ])
    assert code == 0
    steps = parse_diagnostics_csv(diag.read_text())
    assert [step.t for step in steps] == [6, 5, 4, 3, 2, 1]
    assert all(step.style_stylized <= 1e-6 for step in steps)
    assert capsys.readouterr().out.startswith("L_c=")


def test_stylize_video_writes_frames_and_report(tmp_path, weights_path, images):
    frames = tmp_path / "frames"
    frames.mkdir()
    rng = np.random.default_rng(3)
    for index in range(3):
        write_image(frames / f"f{index:03d}.pgm", rng.uniform(0, 1, (8, 8, 1)))
    out, report = tmp_path / "styled", tmp_path / "report.csv"
    code = main([
        "stylize-video", "--frames", str(frames), "--style", str(images["style"]), "--weights", str(weights_path),
        "--out", str(out), "--report", str(report), "--window", "1:6", "--guidance-weight", "0.1",
    ])
    assert code == 0
    assert sorted(path.name for path in out.iterdir()) == ["f000.pgm", "f001.pgm", "f002.pgm"]
    lines = report.read_text().splitlines()
    assert lines[0] == "i,diff"
    assert lines[-2].startswith("mean,") and lines[-1].startswith("var,")


def test_step_count_must_match_the_weights(tmp_path, weights_path, images, capsys):
    code = main([
        "stylize", "--content", str(images["content"]), "--style", str(images["style"]),
        "--weights", str(weights_path), "--out", str(tmp_path / "o.pgm"), "--window", "0:5", "--steps", "5",
    ])
    assert code == 2
    assert "config-error" in capsys.readouterr().err


def test_missing_weights_is_an_io_error(tmp_path, images, capsys):
    code = main([
        "stylize", "--content", str(images["content"]), "--style", str(images["style"]),
        "--weights", str(tmp_path / "missing.ztoy"), "--out", str(tmp_path / "o.pgm"),
    ])
    assert code == 3
    assert "stylereweight: io-error:" in capsys.readouterr().err


def test_corrupt_content_is_an_io_error(tmp_path, weights_path, images):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n8 8\n255\n\x00")
    code = main([
        "stylize", "--content", str(bad), "--style", str(images["style"]),
        "--weights", str(weights_path), "--out", str(tmp_path / "o.pgm"), "--window", "0:6",
    ])
    assert code == 3
