"""Command-line front end.

    gke-means mean --g log --weights 0.5,0.5 --inputs pair.json
    gke-means repfn --g moebius --lambda 0.5 --xmin 1 --xmax 4 --points 2
    gke-means entropy --kind tsallis --t 0.5 --inputs pair.json
    gke-means verify --suite bounds --g power:0.5 --trials 50 --seed 7
    gke-means conjecture --g moebius --trials 200

Global flags (``--seed``, ``--tol``, ``--output``, ``--format``) may appear before
or after the subcommand. Exit codes: 0 success, 1 computation failure (or
violated assertion checks), 2 usage error.
"""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from gke_means.config import get_config
from gke_means.documents import (
    EntropyDocument,
    MatrixDocument,
    MeanDocument,
    dump_matrix_documents,
    load_matrix_documents,
)
from gke_means.errors import BadParameterError, GkeMeansError, ParseError
from gke_means.gke_solver import (
    GkeProblem,
    WeightVector,
    relative_entropy,
    residual,
    solve_gke,
    tsallis_entropy,
)
from gke_means.monotone_fns import CATALOGUE, MonotoneGenerator, parse_generator_spec
from gke_means.rep_func import rep_table
from gke_means.spd_core import SpdMatrix
from gke_means.verify.suite import (
    DEFAULT_POWERS,
    SUITES,
    run_property_suite,
    suite_exit_code,
    suite_report,
    summary_frame,
)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
WEIGHT_SUM_TOL = 1e-9

Subcommand = Literal["mean", "repfn", "entropy", "verify", "conjecture"]


class UsageError(Exception):
    """Flags that parse but do not make sense together."""


def _split_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from e


def _split_ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from e


class CliConfig(BaseModel):
    """Validated view of the parsed command line."""

    model_config = ConfigDict(frozen=True)

    subcommand: Subcommand
    generator_specs: list[str] = Field(default_factory=list)
    weights: list[float] | None = None
    input_path: str | None = None
    output_path: str | None = None
    seed: int | None = None
    tolerance: float | None = Field(default=None, gt=0)
    format: Literal["json", "csv"] = "json"

    max_iterations: int | None = Field(default=None, ge=1)
    lam: float | None = Field(default=None, ge=0, le=1)
    xmin: float | None = None
    xmax: float | None = None
    points: int | None = None
    entropy_kind: Literal["relative", "tsallis"] = "relative"
    t: float | None = None
    suite: str = "all"
    upper_spec: str | None = None
    trials: int | None = None
    dims: list[int] | None = None
    n_operators: list[int] | None = None
    powers: list[float] | None = None

    @field_validator("weights")
    @classmethod
    def _check_weight_sum(cls, weights: list[float] | None) -> list[float] | None:
        if weights is not None and abs(sum(weights) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {sum(weights)}")
        return weights

    def weight_vector(self) -> WeightVector:
        if self.weights is None:
            raise UsageError("--weights is required")
        try:
            return WeightVector.from_values(self.weights, renormalize_tol=WEIGHT_SUM_TOL)
        except BadParameterError as e:
            raise UsageError(str(e)) from e

    def generators(self) -> list[MonotoneGenerator]:
        """Parsed ``--g`` specs; malformed specs are usage errors."""
        try:
            return [parse_generator_spec(spec) for spec in self.generator_specs]
        except (ParseError, BadParameterError) as e:
            raise UsageError(str(e)) from e

    def upper_generator(self) -> MonotoneGenerator | None:
        if self.upper_spec is None:
            return None
        try:
            return parse_generator_spec(self.upper_spec)
        except (ParseError, BadParameterError) as e:
            raise UsageError(str(e)) from e


def _global_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Random seed.")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="Tolerance.")
    common.add_argument("--output", default=argparse.SUPPRESS, help="Write output to this path.")
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(
        prog="gke-means",
        description="Means of positive-definite matrices from the Generalized Karcher Equation.",
        parents=[common],
    )
    commands = parser.add_subparsers(dest="subcommand", required=True)

    mean = commands.add_parser("mean", parents=[common], help="Solve a GKE.")
    mean.add_argument("--g", required=True, help="Generator spec, e.g. log or power:0.5.")
    mean.add_argument("--weights", type=_split_floats, required=True, help="w1,...,wn")
    mean.add_argument("--inputs", required=True, help="JSON array of matrix objects.")
    mean.add_argument("--max-iter", type=int, help="Iteration budget.")

    repfn = commands.add_parser("repfn", parents=[common], help="Tabulate f_lambda.")
    repfn.add_argument("--g", required=True)
    repfn.add_argument("--lambda", dest="lam", type=float, required=True)
    repfn.add_argument("--xmin", type=float, required=True)
    repfn.add_argument("--xmax", type=float, required=True)
    repfn.add_argument("--points", type=int, required=True)

    entropy = commands.add_parser("entropy", parents=[common], help="Relative operator entropy.")
    entropy.add_argument("--kind", choices=("relative", "tsallis"), default="relative")
    entropy.add_argument("--t", type=float, help="Tsallis parameter in (0, 1].")
    entropy.add_argument("--inputs", required=True, help="JSON array of exactly two matrices.")

    for name, help_text in (
        ("verify", "Run verification checks."),
        ("conjecture", "Search for norm-inequality counterexamples."),
    ):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        if name == "verify":
            sub.add_argument("--suite", choices=SUITES, default="all")
            sub.add_argument("--f", help="Upper generator for the order suite.")
            sub.add_argument("--powers", type=_split_floats, help="Deformation powers p >= 1.")
        sub.add_argument("--g", action="append", help="Generator spec; repeatable.")
        sub.add_argument("--trials", type=int)
        sub.add_argument("--dims", type=_split_ints)
        sub.add_argument("--n", dest="n_operators", type=_split_ints)
    return parser


def _to_config(args: argparse.Namespace) -> CliConfig:
    g = getattr(args, "g", None)
    specs = [g] if isinstance(g, str) else list(g or [])
    default_format = "csv" if args.subcommand == "repfn" else get_config().output_format
    return CliConfig(
        subcommand=args.subcommand,
        generator_specs=specs,
        weights=getattr(args, "weights", None),
        input_path=getattr(args, "inputs", None),
        output_path=getattr(args, "output", None),
        seed=getattr(args, "seed", None),
        tolerance=getattr(args, "tol", None),
        format=getattr(args, "format", default_format),
        max_iterations=getattr(args, "max_iter", None),
        lam=getattr(args, "lam", None),
        xmin=getattr(args, "xmin", None),
        xmax=getattr(args, "xmax", None),
        points=getattr(args, "points", None),
        entropy_kind=getattr(args, "kind", "relative"),
        t=getattr(args, "t", None),
        suite=getattr(args, "suite", "conjecture"),
        upper_spec=getattr(args, "f", None),
        trials=getattr(args, "trials", None),
        dims=getattr(args, "dims", None),
        n_operators=getattr(args, "n_operators", None),
        powers=getattr(args, "powers", None),
    )


def load_matrices(path: str | Path) -> list[SpdMatrix]:
    """Read and validate a JSON array of matrix objects.

    Raises:
        ParseError: If the file cannot be read or parsed.
        NotSpdError: If a matrix is invalid; ``index`` names the offending matrix.
    """
    return load_matrix_documents(path)


def save_matrices(path: str | Path, matrices: Sequence[SpdMatrix]) -> None:
    Path(path).write_bytes(dump_matrix_documents(list(matrices)))


def _require_json(cfg: CliConfig) -> None:
    if cfg.format != "json":
        raise UsageError(f"{cfg.subcommand} only writes json")


def _run_mean(cfg: CliConfig) -> tuple[str, int]:
    _require_json(cfg)
    generator = cfg.generators()[0]
    weights = cfg.weight_vector()
    overrides = {"max_iterations": cfg.max_iterations, "residual_tol": cfg.tolerance}
    solver = get_config().solver_config(**{k: v for k, v in overrides.items() if v is not None})
    problem = GkeProblem(weights, tuple(load_matrices(cfg.input_path)), generator)
    report = solve_gke(problem, solver)
    # certificate re-evaluated from the entries that are written out
    solution = SpdMatrix(report.solution.entries.copy())
    document = MeanDocument(
        generator=generator.spec,
        solution=MatrixDocument.from_matrix(solution),
        residual=residual(problem, solution),
        iterations=report.iterations,
        method=report.method,
    )
    return document.model_dump_json(indent=2), EXIT_OK


def _run_repfn(cfg: CliConfig) -> tuple[str, int]:
    if cfg.points is None or cfg.points < 1 or not 0 < cfg.xmin <= cfg.xmax:
        raise UsageError("need 0 < xmin <= xmax and points >= 1")
    generator = cfg.generators()[0]
    tol = cfg.tolerance or get_config().rep_tol
    table = rep_table(generator, cfg.lam, cfg.xmin, cfg.xmax, cfg.points, tol)
    if cfg.format == "csv":
        return table.write_csv(), EXIT_OK
    return table.write_json(), EXIT_OK


def _run_entropy(cfg: CliConfig) -> tuple[str, int]:
    _require_json(cfg)
    if cfg.entropy_kind == "tsallis" and cfg.t is None:
        raise UsageError("--t is required for --kind tsallis")
    matrices = load_matrices(cfg.input_path)
    if len(matrices) != 2:
        raise BadParameterError(f"entropy needs exactly two matrices, got {len(matrices)}")
    a, b = matrices
    if cfg.entropy_kind == "relative":
        value, t = relative_entropy(a, b), None
    else:
        value, t = tsallis_entropy(a, b, cfg.t), cfg.t
    document = EntropyDocument(kind=cfg.entropy_kind, t=t, matrix=value.tolist())
    return document.model_dump_json(indent=2), EXIT_OK


def _run_suite(cfg: CliConfig) -> tuple[str, int]:
    settings = get_config()
    plan = settings.trial_plan(
        seed=cfg.seed,
        trials=cfg.trials,
        tolerance=cfg.tolerance,
        dims=tuple(cfg.dims) if cfg.dims else None,
        n_operators=tuple(cfg.n_operators) if cfg.n_operators else None,
    )
    generators = cfg.generators() or list(CATALOGUE)
    upper = cfg.upper_generator()
    powers = cfg.powers or settings.ando_hiai_powers or list(DEFAULT_POWERS)
    outcomes = run_property_suite(plan, generators, cfg.suite, powers, upper)
    exit_code = EXIT_FAILURE if suite_exit_code(outcomes) else EXIT_OK
    if cfg.format == "csv":
        return summary_frame(outcomes).write_csv(), exit_code
    return suite_report(plan, outcomes).model_dump_json(indent=2), exit_code


_HANDLERS = {
    "mean": _run_mean,
    "repfn": _run_repfn,
    "entropy": _run_entropy,
    "verify": _run_suite,
    "conjecture": _run_suite,
}


def _emit(text: str, output_path: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if output_path:
        Path(output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        cfg = _to_config(args)
        text, code = _HANDLERS[cfg.subcommand](cfg)
    except (UsageError, ValidationError) as e:
        parser.print_usage(sys.stderr)
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GkeMeansError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE

    _emit(text, cfg.output_path)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
