"""Module for reconstruction subcommands: recon-inr and recon-zf"""

import argparse
from pathlib import Path
from typing import Tuple

import numpy as np

from src.models import CoilSensitivities, KSpaceData, MaskSet
from src.repository import storage
from src.routes.options import add_run_options, output_dir, run_config
from src.services.engine import VolumeResult, reconstruct_volume
from src.services.operators import adjoint_model, distance_weights


def register(subparsers) -> None:
    parser = subparsers.add_parser("recon-inr", help="joint implicit-representation reconstruction of every slice")
    add_run_options(parser, acceleration=False, workers=True)
    add_input_options(parser)
    parser.set_defaults(handler=recon_inr)

    parser = subparsers.add_parser("recon-zf", help="zero-filled adjoint reconstruction")
    parser.add_argument("--out", required=True, help="output directory")
    add_input_options(parser)
    parser.set_defaults(handler=recon_zf)


def add_input_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kspace", help="per-slice k-space container, <out>/kspace.mcir by default")
    parser.add_argument("--coils", help="coil container, <out>/coils.mcir by default")
    parser.add_argument("--masks", help="mask container, <out>/masks.mcir by default")


def load_inputs(args: argparse.Namespace, out: Path) -> Tuple[list, CoilSensitivities, MaskSet]:
    """
    The load_inputs function reads k-space, coil maps and masks, falling back to the file names
    the simulate subcommand writes.

    :param args: Parsed command line
    :type args: argparse.Namespace
    :param out: Output directory used for the fallbacks
    :type out: Path
    :return: Per-slice k-space, coils and masks
    :rtype: tuple[list[KSpaceData], CoilSensitivities, MaskSet]
    """
    masks = storage.load_masks(args.masks or out / "masks.mcir")
    coils = storage.load_coils(args.coils or out / "coils.mcir")
    slices = storage.load_kspace(args.kspace or out / "kspace.mcir", masks)
    return slices, coils, masks


def write_inr_outputs(out: Path, result: VolumeResult, dtype: str) -> None:
    """
    The write_inr_outputs function stores a model checkpoint and loss trace per reconstructed
    slice and, when no slice failed, the reconstructed volume.

    :param out: Output directory
    :type out: Path
    :param result: Volume reconstruction
    :type result: VolumeResult
    :param dtype: Complex storage dtype
    :type dtype: str
    :return: None
    """
    for outcome in result.outcomes:
        if outcome.ok:
            storage.save_model(out / f"model_slice{outcome.index}", outcome.result.model, outcome.result.scale)
            storage.save_losses(out / f"losses_slice{outcome.index}.mcir", outcome.result.losses)
    storage.save_images(out / "recon_inr.mcir", result.volume(), dtype=dtype)


def recon_inr(args: argparse.Namespace) -> int:
    config = run_config(args)
    out = output_dir(config)
    slices, coils, masks = load_inputs(args, out)
    train = config.train.model_copy(update={"seed": config.train_seed})
    result = reconstruct_volume(slices, coils, masks, distance_weights(masks.grid), train, workers=args.workers)
    for outcome in result.outcomes:
        if outcome.ok:
            print(f"slice={outcome.index} epochs={len(outcome.result.losses)} "
                  f"final_loss={outcome.result.losses[-1]:.6e} restarted={outcome.result.restarted}")
    write_inr_outputs(out, result, config.storage_dtype)
    return 0


def recon_zf(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    slices, coils, masks = load_inputs(args, out)
    volume = np.stack([adjoint_model(data, coils, masks).data for data in slices])
    storage.save_images(out / "recon_zf.mcir", volume)
    print(f"wrote={out / 'recon_zf.mcir'} slices={volume.shape[0]}")
    return 0
