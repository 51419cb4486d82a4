"""Command line options shared by the subcommands"""

import argparse
from pathlib import Path

from src.conf.config import load_pipeline_config, settings
from src.schemas import PipelineConfig


def add_run_options(parser: argparse.ArgumentParser, seed: bool = True, acceleration: bool = True,
                    workers: bool = False) -> None:
    """
    The add_run_options function adds the flags every run-level subcommand understands.

    :param parser: Subcommand parser
    :type parser: argparse.ArgumentParser
    :param seed: Add --seed
    :type seed: bool
    :param acceleration: Add --R
    :type acceleration: bool
    :param workers: Add --workers, defaulting to MCIR_WORKERS
    :type workers: bool
    :return: None
    """
    parser.add_argument("--config", help="JSON run configuration, built-in defaults when omitted")
    parser.add_argument("--out", help="output directory, overrides out_dir of the configuration")
    if seed:
        parser.add_argument("--seed", type=int, help="base seed; coils, noise and training derive from it")
    if acceleration:
        parser.add_argument("--R", dest="acceleration", type=float, help="acceleration factor")
    if workers:
        parser.add_argument("--workers", type=int, default=settings.workers, help="slice-parallel worker processes")


def run_config(args: argparse.Namespace) -> PipelineConfig:
    return load_pipeline_config(args.config, getattr(args, "seed", None), getattr(args, "acceleration", None),
                                args.out)


def output_dir(config: PipelineConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out
