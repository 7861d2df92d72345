import json
import sys
import time
from argparse import ArgumentTypeError
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError, CommandParser

from lab.choices import PolymerModel, Reduction, WalkKind
from lab.constants import EXIT_BUDGET, EXIT_PRECONDITION, EXIT_USAGE
from lab.enumeration import resolve_workers
from lab.exceptions import BudgetExceededError, PreconditionError
from lab.runs import replay_manifest, write_run
from lab.subcommands import (
    SUBCOMMANDS,
    execute,
    parse_activity,
    parse_point,
    parse_range,
    parse_rational,
)
from polylab.utils import get_polylab_logger

logger = get_polylab_logger(__name__)

RUN_OPTIONS = {"help", "workers", "out"}


class UsageErrorParser(CommandParser):
    """Malformed invocations end with EX_USAGE; exit code 2 is kept for precondition failures."""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")
        raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


def _validated(parse):
    """argparse type that checks the text with `parse` but keeps the text for the manifest."""

    def convert(text):
        try:
            parse(text)
        except PreconditionError as error:
            raise ArgumentTypeError(str(error)) from error
        return text

    convert.__name__ = parse.__name__
    return convert


def _diagram_spec(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as error:
        raise ArgumentTypeError(f"cannot read a diagram spec from {path}: {error}") from error


class Command(BaseCommand):
    help = "Polymer lab: enumerations, torus checks, walk Green functions, diagrams and profiles."

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = UsageErrorParser
        return parser

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(
            dest="subcommand", required=True, parser_class=UsageErrorParser
        )
        self.parameter_names = {}

        def add(name, help_text, build):
            subparser = subparsers.add_parser(name, help=help_text)
            build(subparser)
            self.parameter_names[name] = [
                action.dest for action in subparser._actions if action.dest not in RUN_OPTIONS
            ]
            subparser.add_argument(
                "--workers",
                type=int,
                default=None,
                help="Worker processes (default POLYLAB_WORKERS)",
            )
            subparser.add_argument(
                "--out", default=None, help="Artifact root (default POLYLAB_ARTIFACTS_DIR)"
            )

        def lattice(subparser, nmax=True):
            subparser.add_argument("--d", type=int, required=True, help="Dimension")
            subparser.add_argument("--L", type=int, default=1, help="Spread-out range")
            if nmax:
                subparser.add_argument("--nmax", type=int, required=True, help="Largest bond count")
                subparser.add_argument(
                    "--model", choices=PolymerModel.values, default=PolymerModel.TREE
                )

        def enum(subparser):
            lattice(subparser)

        def twopoint(subparser):
            lattice(subparser)
            subparser.add_argument(
                "--x", type=_validated(parse_point), required=True, help="Lattice point, e.g. 1,0"
            )
            subparser.add_argument(
                "--p", type=_validated(parse_activity), help="Exact activity a/b"
            )
            subparser.add_argument(
                "--lambda-radius",
                type=int,
                help="Check the Simon-Lieb inequality on the box of this radius",
            )

        def chi(subparser):
            lattice(subparser)
            subparser.add_argument("--m", type=float, help="Tilt for the tilted susceptibility")
            subparser.add_argument("--p", type=_validated(parse_activity), help="Activity for xi_2")

        def walk(subparser, many=False):
            lattice(subparser, nmax=False)
            if many:
                subparser.add_argument("--z", type=float, nargs="+", required=True)
            else:
                subparser.add_argument("--z", type=float, required=True)

        def mass(subparser):
            walk(subparser, many=True)
            subparser.add_argument("--kind", choices=WalkKind.values, default=WalkKind.SPREAD_OUT)

        def greens(subparser):
            walk(subparser)
            subparser.add_argument("--grid", type=int, help="Torus grid size N (even, >= 8)")
            subparser.add_argument("--kind", choices=WalkKind.values, default=WalkKind.SPREAD_OUT)

        def decomp(subparser):
            walk(subparser)
            subparser.add_argument("--grid", type=int, help="Grid size N for the remainder phi_z")

        def torus(subparser):
            lattice(subparser)
            subparser.add_argument("--r", type=int, required=True, help="Torus period")
            subparser.add_argument("--x", type=_validated(parse_point), required=True)
            subparser.add_argument(
                "--p", type=_validated(parse_activity), help="Exact activity a/b"
            )

        def sandwich(subparser):
            lattice(subparser)
            subparser.add_argument("--r", type=int, required=True, help="Torus period")
            subparser.add_argument("--x", type=_validated(parse_point), required=True)
            subparser.add_argument(
                "--p", type=_validated(parse_activity), required=True, help="Exact activity a/b"
            )

        def lift(subparser):
            lattice(subparser)
            subparser.add_argument("--r", type=int, required=True, help="Torus period")

        def diagram(subparser):
            walk(subparser)
            subparser.add_argument("--name", help="Catalogue diagram, e.g. square1 or bubble")
            subparser.add_argument("--spec", type=_diagram_spec, help="JSON diagram spec file")
            subparser.add_argument("--a", type=float, default=0.0, help="Weight |x|^a")
            subparser.add_argument("--m", type=float, default=0.0, help="Tilt")
            subparser.add_argument("--radius", type=int, help="Box radius of the G field")
            subparser.add_argument("--reduction", choices=Reduction.values)
            subparser.add_argument(
                "--probe-L", type=int, nargs="+", help="Run the range scaling probe over these L"
            )

        def wrap(subparser):
            walk(subparser)
            subparser.add_argument("--r", type=int, required=True, help="Torus period")
            subparser.add_argument("--k", type=int, default=2, help="Convolution fold")
            subparser.add_argument("--radius", type=int, help="Box radius of S_z")

        def profile(subparser):
            subparser.add_argument(
                "--s", type=_validated(parse_range), required=True, help="lo:hi:step or one value"
            )
            subparser.add_argument("--alpha", type=float)
            subparser.add_argument("--beta", type=float)
            subparser.add_argument("--y", type=float)

        def window(subparser):
            subparser.add_argument("--d", type=int, required=True)
            subparser.add_argument("--r", type=int, required=True, help="Torus period")
            subparser.add_argument("--gamma", type=_validated(parse_rational), default="1/2")
            subparser.add_argument("--dc", type=_validated(parse_rational), default="8")

        add("enum", "Count trees or animals by bond number", enum)
        add("twopoint", "Two-point series and the Simon-Lieb check", twopoint)
        add("chi", "Susceptibility, tilted susceptibility and xi_2", chi)
        add("mass", "Walk masses m_S(z) or m_0(mu)", mass)
        add("greens", "Walk Green function on a torus and its decay fit", greens)
        add("decomp", "lambda_z, mu_z, E_z and the remainder phi_z", decomp)
        add("torus", "Torus two-point and susceptibility series", torus)
        add("sandwich", "Exact torus sandwich bounds", sandwich)
        add("lift-audit", "Exhaustive check of the torus lift", lift)
        add("diagram", "Evaluate a diagram on the walk two-point function", diagram)
        add("wrap", "Torus fold against wrapped Z^d fold", wrap)
        add("profile", "The profile integral I0(s)", profile)
        add("window", "Scaling-window exponents for a torus", window)

        replay = subparsers.add_parser("replay", help="Re-run manifests and compare digests")
        replay.add_argument("manifests", nargs="+", help="manifest.json files or run directories")
        replay.add_argument("--workers", type=int, default=None)

    def handle(self, *args, **options):
        name = options["subcommand"]
        try:
            if name == "replay":
                self.replay(options["manifests"], options["workers"])
                return
            self.run(name, options)
        except BudgetExceededError as error:
            raise CommandError(str(error), returncode=EXIT_BUDGET) from error
        except PreconditionError as error:
            raise CommandError(str(error), returncode=EXIT_PRECONDITION) from error

    def run(self, name, options):
        if name not in SUBCOMMANDS:
            raise CommandError(f"Unknown subcommand {name}", returncode=EXIT_USAGE)
        parameters = {key: options[key] for key in self.parameter_names[name]}
        workers = resolve_workers(options["workers"])

        started = time.perf_counter()
        outcome = execute(name, parameters, workers=workers)
        wall_time = time.perf_counter() - started
        run = write_run(outcome, parameters, workers, wall_time, out_dir=options["out"])

        for line in outcome.summary:
            self.stdout.write(line)
        self.stdout.write(
            self.style.SUCCESS(f"Wrote {run.artifact_path} in {wall_time:.2f}s")
        )

    def replay(self, manifests, workers):
        mismatches = 0
        for path in manifests:
            result = replay_manifest(path, workers=resolve_workers(workers))
            if result.matches:
                self.stdout.write(self.style.SUCCESS(f"{path}: {result.subcommand} reproduced"))
            else:
                mismatches += 1
                self.stdout.write(
                    self.style.ERROR(
                        f"{path}: {result.subcommand} differs "
                        f"(expected {result.expected_digest[:12]}, got {result.actual_digest[:12]})"
                    )
                )
        if mismatches:
            logger.error("[Replay] Outputs differ from their manifests", mismatches=mismatches)
            raise CommandError(f"{mismatches} of {len(manifests)} manifests did not reproduce")
