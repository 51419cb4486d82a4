"""Module for evaluation subcommands: metrics, export-png, pipeline and sweep"""

import argparse
from pathlib import Path

from src.conf.config import load_pipeline_config
from src.repository import storage
from src.repository.containers import read_container
from src.routes.data import write_simulation
from src.routes.options import add_run_options, output_dir, run_config
from src.routes.recon import write_inr_outputs
from src.schemas import MetricParams
from src.services.export import save_mask_montage, save_montage, save_orthogonal_views, windowed
from src.services.metrics import evaluate_volume, format_table
from src.services.pipeline import run_pipeline, run_sweep


def register(subparsers) -> None:
    parser = subparsers.add_parser("metrics", help="SSIM and PSNR of a test volume against a reference")
    parser.add_argument("reference", help="reference image container")
    parser.add_argument("test", help="test image container")
    parser.add_argument("--support", help="bit-packed evaluation mask (Vy, Vz)")
    parser.add_argument("--config", help="JSON run configuration providing the percentiles")
    parser.add_argument("--R", dest="acceleration", type=float, default=1.0, help="acceleration recorded in the report")
    parser.add_argument("--method", default="test", help="method name recorded in the report")
    parser.set_defaults(handler=metrics)

    parser = subparsers.add_parser("export-png", help="per-contrast montage of an image container")
    parser.add_argument("images", help="image container (N, Vy, Vz) or (S, N, Vy, Vz)")
    parser.add_argument("--support", help="bit-packed mask restricting the percentile window")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--title", default="", help="figure title")
    parser.set_defaults(handler=export_png)

    parser = subparsers.add_parser("pipeline", help="simulate, reconstruct, evaluate and export from one config")
    add_run_options(parser, workers=True)
    parser.set_defaults(handler=pipeline)

    parser = subparsers.add_parser("sweep", help="pipeline at several accelerations with a comparison table")
    add_run_options(parser, acceleration=False, workers=True)
    parser.add_argument("--R", dest="accelerations", type=float, nargs="+", help="accelerations to run")
    parser.set_defaults(handler=sweep)


def _support(path):
    return read_container(path, expected="bool") if path else None


def metrics(args: argparse.Namespace) -> int:
    """
    The metrics function scores a test container against a reference container and prints
    the report as key=value lines.

    :param args: Parsed command line
    :type args: argparse.Namespace
    :return: Exit code
    :rtype: int
    """
    params = load_pipeline_config(args.config).metrics if args.config else MetricParams()
    reference, _ = storage.load_images(args.reference)
    test, _ = storage.load_images(args.test)
    report = evaluate_volume(reference, test, _support(args.support), params, args.method, args.acceleration)
    print("\n".join(report.to_lines()))
    return 0


def export_png(args: argparse.Namespace) -> int:
    images, meta = storage.load_images(args.images)
    volume = images if images.ndim == 4 else images[None]
    normalized, = windowed([volume], _support(args.support))
    out = Path(args.out)
    stem = Path(args.images).name.split(".")[0]
    written = [save_montage(normalized[volume.shape[0] // 2], out / f"{stem}.png", meta.ti, args.title)]
    if volume.shape[0] > 1:
        written.append(save_orthogonal_views(normalized, out / f"{stem}_orthogonal.png", title=args.title))
    for path in written:
        print(f"wrote={path}")
    return 0


def pipeline(args: argparse.Namespace) -> int:
    """
    The pipeline function runs the whole chain from one configuration and writes containers,
    metric report and montages into the output directory.

    :param args: Parsed command line
    :type args: argparse.Namespace
    :return: Exit code
    :rtype: int
    """
    config = run_config(args)
    out = output_dir(config)
    result = run_pipeline(config, workers=args.workers)
    simulation = result.simulation
    write_simulation(out, simulation, config.storage_dtype)
    write_inr_outputs(out, result.inr, config.storage_dtype)
    storage.save_images(out / "recon_zf.mcir", result.zero_filled, simulation.ti, config.storage_dtype)

    lines = [line for report in result.reports.values() for line in report.to_lines()]
    (out / "metrics.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))

    volumes = {"ground_truth": simulation.ground_truth, "inr": result.inr_volume, "zero_filled": result.zero_filled}
    normalized = dict(zip(volumes, windowed(list(volumes.values()), simulation.support, config.metrics)))
    middle = config.slices // 2
    for name, volume in normalized.items():
        save_montage(volume[middle], out / f"montage_{name}.png", simulation.ti, name)
        if config.slices > 1:
            save_orthogonal_views(volume, out / f"orthogonal_{name}.png", title=name)
    save_mask_montage(simulation.masks, out / "masks.png")
    return 0


def sweep(args: argparse.Namespace) -> int:
    config = run_config(args)
    out = output_dir(config)
    reports = run_sweep(config, args.accelerations, workers=args.workers)
    table = format_table(reports, config.full_scan_minutes)
    (out / "sweep.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0
