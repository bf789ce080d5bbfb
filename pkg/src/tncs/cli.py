"""Command-line interface: train / encode / decode / bench / qsparsity /
protocol-demo.

Exit codes: 0 success, 2 argument errors, 3 format errors, 4 I/O errors,
5 numerical failures.
"""

from __future__ import annotations

import functools
import logging
import sys

import click
import numpy as np

from . import codec, data, metrics, sampling, training
from .errors import TncsError
from .features import Image
from .mps import MPS


def _fail_with_exit_code(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except TncsError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(4)

    return wrapper


def _load_class_images(images_path, labels_path, label, factor):
    ds = data.read_idx(images_path, labels_path)
    if label is not None:
        ds = data.filter_class(ds, label)
    if factor and factor > 1:
        ds = data.Dataset(
            [data.downscale(img, factor) for img in ds.images], ds.labels, ds.name
        )
    return ds


def _parse_grid(text: str) -> list:
    if ":" in text:
        parts = [int(v) for v in text.split(":")]
        if len(parts) != 3:
            raise click.BadParameter("grid must be start:stop:step")
        start, stop, step = parts
        return list(range(start, stop + 1, step))
    return [int(v) for v in text.split(",") if v]


def _build_plan(strategy, model, dataset, nf, seed):
    strategy = strategy.upper()
    if strategy == "EO":
        return sampling.plan_eosp(model, nf)
    if strategy == "VO":
        return sampling.plan_variance(dataset.images, nf)
    if strategy == "RO":
        return sampling.plan_random(model.n_active, nf, seed)
    raise click.BadParameter(f"unknown strategy {strategy}")


@click.group()
def main():
    """Tensor-network compressed sensing toolkit."""
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout)


@main.command()
@click.option("--images", required=True, type=click.Path(exists=True))
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--class", "label", required=True, type=click.IntRange(0, 9))
@click.option("--chi", required=True, type=int)
@click.option("--tau", default=0.05, show_default=True, type=float)
@click.option("--sweeps", default=20, show_default=True, type=int)
@click.option("--batch", default=0, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--downscale", "factor", default=1, show_default=True, type=int)
@click.option("--limit", default=0, show_default=True, type=int,
              help="Cap the number of training images (0 = all).")
@click.option("--tol", default=0.0, show_default=True, type=float)
@click.option("--out", required=True, type=click.Path())
@_fail_with_exit_code
def train(images, labels, label, chi, tau, sweeps, batch, seed, factor, limit,
          tol, out):
    """Train one Born machine on a single class and save it."""
    ds = _load_class_images(images, labels, label, factor)
    train_images = ds.images[:limit] if limit else ds.images
    cfg = training.TrainConfig(chi_max=chi, tau=tau, sweeps=sweeps, batch=batch,
                               seed=seed, tol=tol)
    model, report = training.train(train_images, cfg)
    data.save_model(model, out)
    click.echo(f"trained on {len(train_images)} images: "
               f"final nll={report.final_nll:.6g} sweeps={report.sweeps_run}")
    click.echo(f"model saved to {out}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--images", required=True, type=click.Path(exists=True))
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--class", "label", default=None, type=click.IntRange(0, 9))
@click.option("--downscale", "factor", default=1, show_default=True, type=int)
@click.option("--image-index", required=True, type=int)
@click.option("--strategy", required=True,
              type=click.Choice(["eo", "vo", "ro"], case_sensitive=False))
@click.option("--nf", required=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "msgdir", required=True, type=click.Path())
@_fail_with_exit_code
def encode(model_path, images, labels, label, factor, image_index, strategy, nf,
           seed, msgdir):
    """Encode one image: project the model on the planned pixel subset."""
    model = data.load_model(model_path)
    ds = _load_class_images(images, labels, label, factor)
    img = ds.images[image_index]
    plan = _build_plan(strategy, model, ds, nf, seed)
    msg = codec.encode(model, img, plan)
    codec.save_message(msg, msgdir, img.width, img.height)
    click.echo(f"encoded image {image_index}: sent {len(msg.sent)} pixels "
               f"({strategy.upper()}), message in {msgdir}")


@main.command()
@click.option("--msg", "msgdir", required=True, type=click.Path(exists=True))
@click.option("--decoder", required=True,
              type=click.Choice(["oneshot", "postselect"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "pgm_path", required=True, type=click.Path())
@_fail_with_exit_code
def decode(msgdir, decoder, seed, pgm_path):
    """Reconstruct the rest pixels of a stored message into a PGM image."""
    msg, width, height = codec.load_message(msgdir)
    if decoder == "oneshot":
        rest = codec.decode_oneshot(msg, seed=seed)
    else:
        rest = codec.decode_postselect(msg)
    recon = data.compose_image(width * height, width, height, msg.sent, rest)
    data.write_pgm(recon, pgm_path)
    click.echo(f"decoded {len(rest)} pixels -> {pgm_path}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--test-images", required=True, type=click.Path(exists=True))
@click.option("--test-labels", required=True, type=click.Path(exists=True))
@click.option("--class", "label", default=None, type=click.IntRange(0, 9))
@click.option("--downscale", "factor", default=1, show_default=True, type=int)
@click.option("--limit", default=0, show_default=True, type=int,
              help="Cap the number of test images (0 = all).")
@click.option("--strategies", default="eo,vo,ro", show_default=True)
@click.option("--nf-grid", default="0:80:5", show_default=True)
@click.option("--decoder", required=True,
              type=click.Choice(["oneshot", "postselect"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--variance-images", default=None, type=click.Path(exists=True),
              help="Rank VO by this image file's variance (e.g. the training "
                   "set) instead of the test set's.")
@click.option("--variance-labels", default=None, type=click.Path(exists=True))
@click.option("--csv", "csv_path", required=True, type=click.Path())
@_fail_with_exit_code
def bench(model_path, test_images, test_labels, label, factor, limit, strategies,
          nf_grid, decoder, seed, variance_images, variance_labels, csv_path):
    """Sweep reconstruction quality over strategies and sent-pixel counts."""
    model = data.load_model(model_path)
    ds = _load_class_images(test_images, test_labels, label, factor)
    if limit:
        ds = data.Dataset(ds.images[:limit], ds.labels[:limit], ds.name)
    variance_set = None
    if variance_images and variance_labels:
        variance_set = _load_class_images(
            variance_images, variance_labels, label, factor
        ).images
    rows = data.run_benchmark(
        model, ds, [s for s in strategies.split(",") if s],
        _parse_grid(nf_grid), decoder, seed, variance_set=variance_set,
    )
    text = metrics.benchmark_csv(rows)
    with open(csv_path, "w") as f:
        f.write(text)
    click.echo(text.rstrip("\n"))


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", required=True, type=click.Path())
@_fail_with_exit_code
def qsparsity(model_path, csv_path):
    """Entanglement-decay profile and log2 q-sparsity of a model."""
    model = data.load_model(model_path)
    result = sampling.qsparsity(model)
    with open(csv_path, "w") as f:
        f.write(metrics.qsparsity_csv(result.sbar_profile))
    click.echo(f"log2 q-sparsity = {result.log2_value:.4f} "
               f"over {model.n_active} sites (profile in {csv_path})")


@main.command("protocol-demo")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--images", required=True, type=click.Path(exists=True))
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--class", "label", default=None, type=click.IntRange(0, 9))
@click.option("--downscale", "factor", default=1, show_default=True, type=int)
@click.option("--image-index", required=True, type=int)
@click.option("--nf", required=True, type=int)
@click.option("--strategy", default="eo", show_default=True,
              type=click.Choice(["eo", "vo", "ro"], case_sensitive=False))
@click.option("--salt", required=True, help="Hex-encoded digest salt.")
@click.option("--seed", default=0, show_default=True, type=int)
@_fail_with_exit_code
def protocol_demo(model_path, images, labels, label, factor, image_index, nf,
                  strategy, salt, seed):
    """Round-trip demo: encode, encrypt the sent pixels, decode, decrypt.

    The digest layer touches only the classically transmitted pixels, so the
    reconstruction must match the unencrypted pipeline exactly; both PSNR
    values are printed.
    """
    model = data.load_model(model_path)
    ds = _load_class_images(images, labels, label, factor)
    img = ds.images[image_index]
    quantized = Image(np.round(img.pixels * 255.0) / 255.0, img.width, img.height)
    plan = _build_plan(strategy, model, ds, nf, seed)

    msg = codec.encode(model, quantized, plan)
    rest_truth = {s: float(quantized.pixels[s]) for s in msg.phi.active_sites}
    cipher = codec.f_encrypt(msg.sent, rest_truth, bytes.fromhex(salt), plan=plan)
    recovered = codec.f_decrypt(cipher, rest_truth)
    if any(abs(recovered[s] - msg.sent[s]) > 0 for s in msg.sent):
        raise TncsError("encrypt/decrypt round trip failed")

    rest = codec.decode_postselect(msg)
    recon = data.compose_image(quantized.n_pixels, img.width, img.height,
                               recovered, rest)
    plain = data.compose_image(quantized.n_pixels, img.width, img.height,
                               msg.sent, rest)
    psnr_cipher = metrics.psnr(quantized, recon)
    psnr_plain = metrics.psnr(quantized, plain)
    click.echo(f"round trip ok: {len(msg.sent)} pixels through the F layer")
    click.echo(f"psnr encrypted={metrics.format_db(psnr_cipher)} dB "
               f"plain={metrics.format_db(psnr_plain)} dB "
               f"match={psnr_cipher == psnr_plain}")


if __name__ == "__main__":
    main()
