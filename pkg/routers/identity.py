import logging
from pathlib import Path
from typing import Optional

import typer

from schemas.run_config import Command, OutputFormat
from schemas.superoscillation import IdentityCheckName
from services.exceptions import ExitCode
from routers import utils

logger = logging.getLogger(__name__)

router = typer.Typer()

IDENTITY_HEADER = ("case", "max_error", "tolerance", "samples", "violations", "passed")


@router.command("identity-check")
@utils.exit_on_error
def cmd_identity_check(
    check: IdentityCheckName = typer.Option(..., "--check", help="Which identity or inequality suite to run."),
    seed: int = typer.Option(0, "--seed", help="Seed of the random sample generator."),
    precision: int = typer.Option(128, "--precision", help="Working precision in bits."),
    out: Optional[Path] = typer.Option(None, "--out"),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
    max_panels: Optional[int] = typer.Option(None, "--max-panels"),
) -> None:
    """Run an identity suite, print the per-case table and exit 5 on any violation."""
    config = utils.run_config(Command.IDENTITY_CHECK, precision_bits=precision, output=out, format=output_format,
                              rel_tol=rel_tol, max_panels=max_panels)
    services = utils.get_services(config)
    export = services.export

    result = services.identity.run(check, seed=seed)
    typer.echo(export.identity_table(result), err=True)
    if output_format == OutputFormat.CSV:
        rows = [
            [case.label, repr(case.max_error), repr(case.tolerance), str(case.samples), str(case.violations),
             str(case.passed).lower()]
            for case in result.cases
        ]
        text = export.render_csv(IDENTITY_HEADER, rows)
    else:
        text = export.render_json(export.identity_document(result))
    export.write(text, out)

    if not result.passed:
        for case in result.cases:
            if not case.passed:
                logger.error(f"{check.value} {case.label}: {case.violations} violations, witness {case.witness}")
                typer.echo(f"witness {case.label}: {case.witness}", err=True)
        raise typer.Exit(code=int(ExitCode.VERIFICATION))
