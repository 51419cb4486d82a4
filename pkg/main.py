import argparse
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from src.conf.config import settings
from src.conf.log import setup_logging
from src.exceptions import InvalidParameterError, ReconError
from src.routes import data, evaluate, recon


def error_line(code: str, detail: str) -> str:
    detail = " ".join(str(detail).split()).replace('"', "'")
    return f'error code={code} detail="{detail}"'


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors follow the single-line error format."""

    def error(self, message):
        print(error_line("usage", message), file=sys.stderr)
        sys.exit(InvalidParameterError.exit_code)


def build_parser() -> argparse.ArgumentParser:
    """
    The build_parser function assembles the command line from the subcommands of every route module.

    :return: Parser with one subcommand per operation
    :rtype: argparse.ArgumentParser
    """
    parser = CliParser(prog="mcir", description="Multi-contrast MRI reconstruction with a hash-grid neural representation")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)
    data.register(subparsers)
    recon.register(subparsers)
    evaluate.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    The main function parses the command line, runs the chosen subcommand and turns every
    toolkit or validation error into one stderr line and a nonzero exit code.

    :param argv: Arguments without the program name, sys.argv when None
    :type argv: Sequence[str] | None
    :return: Exit code
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    setup_logging(settings.log_level)
    try:
        return args.handler(args)
    except ReconError as exc:
        print(error_line(exc.code, exc.detail), file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print(error_line(InvalidParameterError.code, exc), file=sys.stderr)
        return InvalidParameterError.exit_code


if __name__ == "__main__":
    sys.exit(main())
