"""Module for data subcommands: phantom, mask, simulate and ingest"""

import argparse
import logging
from pathlib import Path

import numpy as np

from src.exceptions import ShapeMismatchError
from src.models import KSpaceData
from src.repository import storage
from src.repository.containers import read_container, write_container
from src.routes.options import add_run_options, output_dir, run_config
from src.services.export import save_mask_montage
from src.services.phantom import slice_specs, synthesize_volume
from src.services.pipeline import Simulation, build_masks, simulate as simulate_acquisition
from src.services.sampling import acceleration_of, psf_sidelobe_ratio

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("phantom", help="write the ground-truth phantom volume")
    add_run_options(parser, seed=False, acceleration=False)
    parser.set_defaults(handler=phantom)

    parser = subparsers.add_parser("mask", help="write complementary sampling masks and their PNG")
    add_run_options(parser)
    parser.set_defaults(handler=mask)

    parser = subparsers.add_parser("simulate", help="simulate an undersampled multi-coil acquisition")
    add_run_options(parser)
    parser.set_defaults(handler=simulate)

    parser = subparsers.add_parser("ingest", help="decouple 3D k-space (kx, C, N, ky, kz) into per-slice k-space")
    parser.add_argument("input", help="container with 3D k-space")
    parser.add_argument("--masks", required=True, help="mask container of the acquisition")
    parser.add_argument("--out", required=True, help="output directory")
    parser.set_defaults(handler=ingest)


def write_simulation(out: Path, simulation: Simulation, dtype: str) -> None:
    """
    The write_simulation function stores ground truth, support, coils, masks and acquired k-space
    under fixed names in ``out``.

    :param out: Output directory
    :type out: Path
    :param simulation: Simulated run
    :type simulation: Simulation
    :param dtype: Complex storage dtype
    :type dtype: str
    :return: None
    """
    storage.save_images(out / "ground_truth.mcir", simulation.ground_truth, simulation.ti, dtype)
    write_container(out / "support.mcir", simulation.support)
    storage.save_coils(out / "coils.mcir", simulation.coils, dtype)
    storage.save_masks(out / "masks.mcir", simulation.masks)
    storage.save_kspace(out / "kspace.mcir", simulation.acquired, dtype)


def phantom(args: argparse.Namespace) -> int:
    """
    The phantom function renders the configured phantom, one slice per configured slice.

    :param args: Parsed command line
    :type args: argparse.Namespace
    :return: Exit code
    :rtype: int
    """
    config = run_config(args)
    out = output_dir(config)
    spec = config.phantom_spec()
    volume, support = synthesize_volume(slice_specs(spec, config.slices, config.slice_taper))
    storage.save_images(out / "ground_truth.mcir", volume, spec.ti_schedule, config.storage_dtype)
    write_container(out / "support.mcir", support)
    print(f"wrote={out / 'ground_truth.mcir'} shape={'x'.join(map(str, volume.shape))}")
    return 0


def mask(args: argparse.Namespace) -> int:
    config = run_config(args)
    out = output_dir(config)
    masks = build_masks(config)
    storage.save_masks(out / "masks.mcir", masks)
    save_mask_montage(masks, out / "masks.png")
    threshold = config.masks.psf_sidelobe_threshold
    for item in masks.masks:
        ratio = psf_sidelobe_ratio(item)
        if ratio >= threshold:
            logger.warning(f"contrast={item.contrast} psf={ratio:.4f} threshold={threshold:g}")
        print(f"contrast={item.contrast} seed={item.seed} R={acceleration_of(item):.3f} r0={item.r0:.4f} "
              f"psf={ratio:.4f}")
    return 0


def simulate(args: argparse.Namespace) -> int:
    config = run_config(args)
    out = output_dir(config)
    simulation = simulate_acquisition(config)
    write_simulation(out, simulation, config.storage_dtype)
    print(f"wrote={out} slices={len(simulation.acquired)} sigma={simulation.sigma:.6e} "
          f"coil_laplacian={simulation.coil_laplacian:.4f}")
    return 0


def ingest(args: argparse.Namespace) -> int:
    """
    The ingest function turns 3D k-space into the per-slice k-space container read by the
    reconstruction subcommands.

    :param args: Parsed command line
    :type args: argparse.Namespace
    :return: Exit code
    :rtype: int
    """
    volume = read_container(args.input)
    masks = storage.load_masks(args.masks)
    if volume.ndim != 5 or volume.shape[2:] != masks.bits.shape:
        raise ShapeMismatchError(f"3D k-space {volume.shape} does not match (kx, C, N, ky, kz) with masks {masks.bits.shape}")
    slices = storage.decouple_readout(volume.astype(np.complex128)) * masks.bits[None, None]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    storage.save_kspace(out / "kspace.mcir", [KSpaceData(item, masks) for item in slices])
    print(f"wrote={out / 'kspace.mcir'} slices={slices.shape[0]}")
    return 0
