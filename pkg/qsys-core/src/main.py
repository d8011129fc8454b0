import argparse
import sys
from collections.abc import Sequence

from loguru import logger

from .config import settings
from .engine.errors import QSysError, SchemaError
from .models.report_models import Report
from .services.check_service import CheckService
from .services.completion_service import CompletionService
from .services.loader_service import LoaderService
from .services.search_service import SearchService
from .services.theorem_service import TheoremService


EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def configure_logging(level: str | None = None) -> None:
    """stderr sink at the configured level; stdout is reserved for JSON."""
    logger.remove()
    logger.add(sys.stderr, level=(level or settings.log_level).upper())
    if settings.log_file:
        logger.add(settings.log_file, level="DEBUG", rotation="10 MB")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="absolute tolerance (overrides QSYS_TOL)")
    common.add_argument("--seed", type=int, default=None, help="seed for eigen-splitting and search starts")
    common.add_argument("--log-level", default=None, help="stderr log level")

    parser = _Parser(prog="qsys", description="Q-system completion engine for finitely presented 2-categories")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    validate = commands.add_parser("validate", parents=[common], help="validate a presentation")
    validate.add_argument("file", help="presentation file, workspace file or bundled:<name>")

    check = commands.add_parser("check", parents=[common], help="check one structure of a workspace")
    check.add_argument("file")
    target = check.add_mutually_exclusive_group(required=True)
    for kind in CheckService.KINDS:
        target.add_argument(f"--{kind}", metavar="ID")

    complete = commands.add_parser("complete", parents=[common], help="complete a list of Q-systems")
    complete.add_argument("file")
    complete.add_argument("--qsystems", default=None, help="comma separated ids or trivial:<object>")
    complete.add_argument("--out", default=None, help="write the completed presentation here")

    find = commands.add_parser("find-qsystems", parents=[common], help="search small 1-cells for Q-systems")
    find.add_argument("file")
    find.add_argument("--object", required=True, dest="base")
    find.add_argument("--dim-bound", type=float, required=True)

    theorems = commands.add_parser("verify-theorems", parents=[common], help="run a theorem suite")
    theorems.add_argument("file", nargs="?", default=None, help="workspace to verify instead of a bundled suite")
    theorems.add_argument("--suite", default=None, choices=TheoremService.SUITES)
    return parser


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _report_exit(report: Report) -> int:
    _emit(report.to_json())
    return EXIT_PASS if report.passed else EXIT_FAIL


def run(args: argparse.Namespace) -> int:
    loader = LoaderService()
    if args.command == "validate":
        pres = loader.load_presentation(args.file)
        return _report_exit(CheckService(args.tol, args.seed).validate(pres))

    if args.command == "check":
        workspace = loader.load_workspace(args.file)
        kind = next(kind for kind in CheckService.KINDS if getattr(args, kind) is not None)
        return _report_exit(CheckService(args.tol, args.seed).check(workspace, kind, getattr(args, kind)))

    if args.command == "complete":
        workspace = loader.load_workspace(args.file)
        names = [name.strip() for name in args.qsystems.split(",") if name.strip()] if args.qsystems else None
        service = CompletionService(args.tol, args.seed)
        pres, report = service.complete(workspace, names)
        text = service.export(pres, args.out)
        if args.out:
            return _report_exit(report)
        _emit(text)
        return EXIT_PASS if report.passed else EXIT_FAIL

    if args.command == "find-qsystems":
        if args.dim_bound < 1:
            raise UsageError("--dim-bound must be at least 1")
        pres = loader.load_presentation(args.file)
        if args.base not in pres.objects:
            raise UsageError(f"unknown object '{args.base}'")
        result = SearchService(args.tol, args.seed).find(pres, args.base, args.dim_bound)
        _emit(result.model_dump_json(indent=2))
        return EXIT_PASS

    service = TheoremService(args.tol, args.seed)
    if args.suite and args.file:
        raise UsageError("give either a workspace file or --suite, not both")
    if args.suite:
        return _report_exit(service.run_suite(args.suite))
    if args.file:
        return _report_exit(service.run_workspace(loader.load_workspace(args.file)))
    raise UsageError("verify-theorems needs a workspace file or --suite")


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        if args.log_level:
            configure_logging(args.log_level)
        if args.tol is not None and not args.tol > 0:
            raise UsageError("--tol must be positive")
        return run(args)
    except UsageError as e:
        logger.error(f"Usage error: {str(e)}")
        return EXIT_USAGE
    except SchemaError as e:
        logger.error(f"Schema error: {str(e)}")
        return EXIT_USAGE
    except QSysError as e:
        logger.error(f"Error: {str(e)}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
