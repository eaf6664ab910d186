import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, Tuple

from pydantic import ValidationError

from stylereweight.cli.config_file import read_config_file
from stylereweight.cli.image_io import list_frames, read_image, read_mask, write_image
from stylereweight.cli.run_config import RunConfig
from stylereweight.denoiser.config import ToyDenoiserConfig
from stylereweight.denoiser.textures import make_texture_dataset
from stylereweight.denoiser.toy_denoiser import ToyDenoiser
from stylereweight.denoiser.training import train
from stylereweight.denoiser.weights_io import load_weights, save_weights
from stylereweight.diffusion.schedule import NoiseSchedule
from stylereweight.errors import ConfigError
from stylereweight.pipeline.diagnostics import diagnostics_csv
from stylereweight.pipeline.dual_path import DualPathStylizer
from stylereweight.pipeline.extractor import deterministic_extractor
from stylereweight.pipeline.metrics import perceptual_losses
from stylereweight.video.video_stylizer import stylize_video

logger = logging.getLogger(__name__)

PROG = "stylereweight"
DEFAULT_STEPS = 30
EXIT_RUNTIME, EXIT_USAGE, EXIT_IO = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{PROG}: usage-error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key=value file; flags given on the command line win")
    common.add_argument("--seed", type=int, help="seed for every random stream (default 0)")
    common.add_argument("--steps", type=int, help="number of diffusion steps T")
    common.add_argument("--schedule", choices=["linear", "cosine"], help="noise schedule (default linear)")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    return common


def _injection_options() -> argparse.ArgumentParser:
    injection = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    injection.add_argument("--style", action="append", help="style image (P5/P6); repeat for several styles")
    injection.add_argument("--weights", help="toy denoiser weights (ZTOY)")
    injection.add_argument("--lambda", type=float, help="style logit scale (default 1.2)")
    injection.add_argument("--window", help="reverse-step window start:end (default 5:30)")
    injection.add_argument("--blocks", help="comma-separated block indices (default: later half)")
    injection.add_argument("--sain", choices=["off", "printed", "prose", "mean"], help="initial latent mean shift (default prose)")
    injection.add_argument(
        "--fusion", choices=["self", "naive-cross", "simple-add", "reweighted", "offset-c"],
        help="attention fusion mode (default reweighted)",
    )
    injection.add_argument("--mask", help="PGM style mask: 255 inside the region, 0 outside, between on the ramp")
    injection.add_argument("--ramp-floor", dest="ramp_floor", type=float, help="logit offset at mask gain 0 (default -1e9)")
    injection.add_argument(
        "--refinements", type=int,
        help="fixed-point refinements per inversion step (default 0, plain inversion that reconstructs to "
             "about 2e-2 at T=30; a few refinements bring the round trip under 1e-3)",
    )
    injection.add_argument("--no-clip", dest="clip", action="store_false",
                           help="do not clamp noise-free predictions to the [0, 1] image range")
    return injection


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Zero-shot style transfer with dual-path DDIM and reweighted attention.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common, injection = _common_options(), _injection_options()

    trainer = commands.add_parser("train-toy-denoiser", parents=[common], argument_default=argparse.SUPPRESS,
                                  help="train the toy denoiser on procedural textures")
    trainer.add_argument("--size", type=int, help="texture side in pixels (default 16)")
    trainer.add_argument("--epochs", type=int, help="training epochs (default 200)")
    trainer.add_argument("--lr", type=float, help="SGD learning rate (default 0.05)")
    trainer.add_argument("--kinds", help="comma-separated texture kinds (default stripes,dots)")
    trainer.add_argument("--count", type=int, help="number of training textures (default 8)")
    trainer.add_argument("--patch", type=int, help="patch size (default 4)")
    trainer.add_argument("--embed-dim", dest="embed_dim", type=int, help="token width d (default 32)")
    trainer.add_argument("--depth", type=int, help="attention blocks L (default 4)")
    trainer.add_argument("--out", help="weights file to write")

    stylize = commands.add_parser("stylize", parents=[common, injection], argument_default=argparse.SUPPRESS,
                                  help="stylize one content image")
    stylize.add_argument("--content", help="content image (P5/P6)")
    stylize.add_argument("--out", help="stylized image to write")
    stylize.add_argument("--diag", help="per-step diagnostics CSV to write")

    video = commands.add_parser("stylize-video", parents=[common, injection], argument_default=argparse.SUPPRESS,
                                help="stylize a directory of numbered frames")
    video.add_argument("--frames", help="directory of zero-padded numbered frames")
    video.add_argument("--guidance-weight", dest="guidance_weight", type=float, help="energy guidance step w_g (default 0.05)")
    video.add_argument("--guidance-window", dest="guidance_window", help="guidance step window (default: the injection window)")
    video.add_argument("--out", help="output directory")
    video.add_argument("--report", help="consistency report CSV to write")

    diagnose = commands.add_parser("diagnose", parents=[common, injection], argument_default=argparse.SUPPRESS,
                                   help="write per-step style distances and perceptual losses")
    diagnose.add_argument("--content", help="content image (P5/P6)")
    diagnose.add_argument("--diag", help="per-step diagnostics CSV to write")
    diagnose.add_argument("--out", help="optionally also write the stylized image")
    diagnose.add_argument("--similarity", action="store_true", help="record the attention similarity heatmap")
    diagnose.add_argument("--extractor-seed", dest="extractor_seed", type=int, help="seed of the stand-in feature extractor")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parses the command line, merges it over the --config file and validates the result."""
    settings = vars(build_parser().parse_args(argv))
    config_path = settings.pop("config", None)
    merged = read_config_file(config_path) if config_path else {}
    merged.update(settings)
    return RunConfig(**merged)


def _load_engine(config: RunConfig) -> Tuple[ToyDenoiser, NoiseSchedule]:
    denoiser = load_weights(config.weights)
    steps = config.steps or denoiser.config.steps
    if steps != denoiser.config.steps:
        raise ConfigError(f"--steps {steps} does not match the T={denoiser.config.steps} the weights were trained for.")
    return denoiser, config.noise_schedule(steps)


def _stylizer(config: RunConfig) -> DualPathStylizer:
    denoiser, schedule = _load_engine(config)
    mask = read_mask(config.mask, denoiser.config.grid_size, config.ramp_floor) if config.mask else None
    return DualPathStylizer(denoiser, schedule, config.injection_config(mask))


def run_train(config: RunConfig) -> int:
    steps = config.steps or DEFAULT_STEPS
    dataset = make_texture_dataset(config.kinds, config.count, config.size, config.seed, patch_size=config.patch)
    architecture = ToyDenoiserConfig(
        image_size=config.size, channels=1, patch_size=config.patch,
        embed_dim=config.embed_dim, depth=config.depth, steps=steps,
    )
    denoiser = train(dataset, config.noise_schedule(steps), config.epochs, config.lr, config.seed, config=architecture)
    save_weights(config.out, denoiser)
    logger.info(f"Wrote weights to {config.out}")
    return 0


def run_stylize(config: RunConfig) -> int:
    stylizer = _stylizer(config)
    result = stylizer.stylize(read_image(config.content), [read_image(path) for path in config.style])
    write_image(config.out, result.stylized)
    if config.diag:
        Path(config.diag).write_text(diagnostics_csv(result.diagnostics), encoding="utf-8")
    return 0


def run_diagnose(config: RunConfig) -> int:
    stylizer = _stylizer(config)
    content = read_image(config.content)
    styles = [read_image(path) for path in config.style]
    result = stylizer.stylize(content, styles)
    Path(config.diag).write_text(diagnostics_csv(result.diagnostics), encoding="utf-8")
    if config.out:
        write_image(config.out, result.stylized)

    extractor = deterministic_extractor(config.extractor_seed, channels=content.shape[2])
    content_loss, style_loss = perceptual_losses(result.stylized, content, styles[0], extractor)
    print(f"L_c={content_loss:.6f} L_s={style_loss:.6f}")
    return 0


def run_video(config: RunConfig) -> int:
    denoiser, schedule = _load_engine(config)
    paths = list_frames(config.frames)
    if not paths:
        raise ConfigError(f"No P5/P6 frames found in {config.frames}.")
    mask = read_mask(config.mask, denoiser.config.grid_size, config.ramp_floor) if config.mask else None
    outputs, report = stylize_video(
        [read_image(path) for path in paths],
        [read_image(path) for path in config.style],
        denoiser,
        schedule,
        config.injection_config(mask),
        config.guidance_config(),
    )
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path, frame in zip(paths, outputs):
        write_image(out_dir / path.name, frame)
    if config.report:
        Path(config.report).write_text(report.to_csv(), encoding="utf-8")
    logger.info(f"Consistency over {len(outputs)} frames: mean_diff={report.mean_diff:.6f} var_diff={report.var_diff:.6f}")
    return 0


COMMANDS = {
    "train-toy-denoiser": run_train,
    "stylize": run_stylize,
    "stylize-video": run_video,
    "diagnose": run_diagnose,
}


def run(config: RunConfig) -> int:
    return COMMANDS[config.command](config)


def _one_line(error: Exception) -> str:
    if isinstance(error, ValidationError):
        return "; ".join(
            f"{'.'.join(str(part) for part in detail['loc']) or 'config'}: {detail['msg']}" for detail in error.errors()
        )
    return " ".join(str(error).split())


def _fail(kind: str, error: Exception, code: int) -> int:
    print(f"{PROG}: {kind}-error: {_one_line(error)}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if config.verbose else logging.INFO,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        return run(config)
    except SystemExit as exit_request:
        if exit_request.code is None:
            return 0
        return exit_request.code if isinstance(exit_request.code, int) else EXIT_USAGE
    except (ValidationError, ConfigError) as error:
        return _fail("config", error, EXIT_USAGE)
    except OSError as error:
        return _fail("io", error, EXIT_IO)
    except (ValueError, RuntimeError) as error:
        return _fail("runtime", error, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
