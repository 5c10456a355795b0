"""Command-line front end: parse a RunConfig, run one command, write its output."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections.abc import Sequence

from pydantic import ValidationError

from . import __version__
from .config import RunConfig
from .errors import ConvergenceError, PtWignerError, RealnessError
from .flow import circulation_sweep, flow_field
from .hamiltonian import PotentialSpec, assemble
from .serialization import (
    CIRCULATION_COLUMNS,
    EP_COLUMNS,
    FLOW_COLUMNS,
    SPECTRUM_COLUMNS,
    VALIDATION_COLUMNS,
    WIGNER_COLUMNS,
    circulation_rows,
    ep_rows,
    field_rows,
    spectrum_rows,
    write_output,
)
from .spectrum import Classification, eigendecompose, find_ep, sweep
from .validation_suite import run_validation
from .wigner import wigner_from_coeffs

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptwigner",
        description="Spectra, Wigner functions and Wigner flow of the -(ix)^eps oscillator family.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=[
        "spectrum-sweep", "ep-find", "wigner-grid", "flow-field", "circulation-sweep", "validate",
    ])
    parser.add_argument("--eps", help="value or start:stop:step (stop included, never exceeded)")
    parser.add_argument("--n-max", type=int, dest="n_max")
    parser.add_argument("--state", type=int, dest="state_index", help="level index in Spectrum order")
    parser.add_argument("--grid", help="x_min:x_max:n_x[,p_min:p_max:n_p]")
    parser.add_argument("--branches", help="two level indices, e.g. 1,2")
    parser.add_argument("--bracket", help="eps_lo,eps_hi for ep-find")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--r-init", type=float, dest="r_init")
    parser.add_argument("--format", choices=["csv", "json", "xlsx"])
    parser.add_argument("--output")
    parser.add_argument(
        "--include-dwdt", action="store_true", default=None, dest="include_dwdt",
        help="subtract the stationary rate 2 Im(E) W from the integrand (off by default: "
             "the t=0 snapshot gives C = 2 Im E in the broken phase, while this option gives ~0 everywhere)",
    )
    parser.add_argument("--levels", type=int, help="keep the lowest K levels per spectrum record")
    parser.add_argument("--workers", type=int)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {
        key: value for key, value in vars(args).items()
        if value is not None and key not in ("verbose", "quiet")
    }
    return RunConfig.from_env(**fields)


def _meta(config: RunConfig, **extra) -> dict:
    meta = {"command": config.command, "version": __version__, "n_max": config.n_max}
    meta.update(config.echo())
    meta.update(extra)
    return meta


def run(config: RunConfig) -> int:
    """Execute one command and write its output file(s).

    Flow:
    1. Compute the command's result (sweep, bisection, grid or suite).
    2. Flatten it into rows.
    3. Write rows plus the config echo atomically.
    """
    t0 = time.time()
    path = config.output_path()
    report: list[dict] = []
    failures: list[dict] = []
    status = EXIT_OK

    # ── Step 1+2: Compute and flatten ─────────────────────────────────────
    if config.command == "spectrum-sweep":
        records = sweep(config.eps.values(), config.n_max, workers=config.workers, errors=failures)
        rows = spectrum_rows(records, config.levels)
        columns = SPECTRUM_COLUMNS
        for record in records:
            report.extend({"source": f"eps={record.epsilon:.6g}", "message": w} for w in record.warnings)
        meta = _meta(config)

    elif config.command == "ep-find":
        result = find_ep(config.branches, config.bracket, config.n_max, config.tol)
        rows = ep_rows(result)
        columns = EP_COLUMNS
        meta = _meta(config, initial_bracket=list(result.initial_bracket))

    elif config.command in ("wigner-grid", "flow-field"):
        eps = config.eps.values()[0]
        spectrum = eigendecompose(assemble(eps, config.n_max))
        pair = spectrum.pairs[config.state_index]
        grid = config.grid.to_grid()
        if config.command == "wigner-grid":
            w = wigner_from_coeffs(pair.coeffs, grid, energy=pair.value, state_index=config.state_index)
            rows = field_rows(w)
            columns = WIGNER_COLUMNS
        else:
            w, flow = flow_field(
                pair.coeffs, PotentialSpec(eps), grid, energy=pair.value, state_index=config.state_index,
            )
            rows = field_rows(w, flow)
            columns = FLOW_COLUMNS
        if pair.classification is not Classification.REAL:
            report.append({"source": f"state {config.state_index}",
                           "message": f"{pair.classification.value} eigenvalue {pair.value:.12g}"})
        meta = _meta(
            config,
            energy={"re": pair.value.real, "im": pair.value.imag},
            classification=pair.classification.value,
            time_convention=w.time_convention,
        )

    elif config.command == "circulation-sweep":
        results = circulation_sweep(
            config.eps.values(), config.n_max, config.state_index, config.r_init,
            include_dwdt=config.include_dwdt, workers=config.workers, errors=failures,
        )
        rows = circulation_rows(results)
        columns = CIRCULATION_COLUMNS
        meta = _meta(config)

    else:
        checks = run_validation(config.n_max)
        rows = [c.as_row() for c in checks]
        columns = VALIDATION_COLUMNS
        failed = [c for c in checks if not c.passed]
        report.extend({"source": c.check, "message": c.detail} for c in failed)
        if failed:
            logger.error("%d of %d checks failed: %s", len(failed), len(checks),
                         ", ".join(c.check for c in failed))
            status = EXIT_NUMERICAL
        meta = _meta(config)

    if failures:
        logger.error("%d eps point(s) did not converge; writing partial output", len(failures))
        report.extend(failures)
        meta["failed_points"] = [f["source"] for f in failures]
        status = EXIT_NUMERICAL

    # ── Step 3: Write ─────────────────────────────────────────────────────
    write_output(path, rows, columns, config.format, meta, report=report)
    logger.info("%s finished in %.1fs", config.command, time.time() - t0)
    return status


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        config = config_from_args(args)
    except (ValidationError, ValueError) as exc:
        logger.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG

    try:
        return run(config)
    except (ConvergenceError, RealnessError) as exc:
        logger.error("Numerical non-convergence: %s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        logger.error("I/O failure writing %s: %s", config.output_path(), exc)
        return EXIT_IO
    except (PtWignerError, ValueError) as exc:
        # Precondition violations: invalid EP bracket, grid not covering the state.
        logger.error("Invalid request: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
