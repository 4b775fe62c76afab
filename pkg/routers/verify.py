import logging
from pathlib import Path
from typing import Optional

import typer

from schemas.run_config import Command, OutputFormat
from schemas.superoscillation import IndexKind
from services.exceptions import ExitCode, SpecParseError
from routers import utils

logger = logging.getLogger(__name__)

router = typer.Typer()


@router.command("verify")
@utils.exit_on_error
def cmd_verify(
    spec: Path = typer.Option(..., "--spec", help="Family spec JSON file."),
    indices: str = typer.Option(..., "--indices", help="Comma separated n (or delta) values, in order."),
    B: Optional[float] = typer.Option(None, "--B", help="Exponential weight of the A1 distance."),
    cgrid: Optional[str] = typer.Option(None, "--cgrid", help="Sup grid rmax:nr:na."),
    kappa1: Optional[float] = typer.Option(None, "--kappa1"),
    kappa2: Optional[float] = typer.Option(None, "--kappa2"),
    defect_tol: float = typer.Option(1e-12, "--defect-tol", help="Taylor defect tolerance, scaled by |a|^l."),
    precision: int = typer.Option(128, "--precision", help="Working precision in bits."),
    out: Optional[Path] = typer.Option(None, "--out"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
    max_panels: Optional[int] = typer.Option(None, "--max-panels"),
) -> None:
    """Convergence report over a list of indices; exit 5 when any check fails."""
    config = utils.run_config(Command.VERIFY, spec_path=spec, precision_bits=precision, output=out,
                              format=OutputFormat.JSON, cgrid=utils.parse_cgrid(cgrid),
                              rel_tol=rel_tol, max_panels=max_panels)
    if (kappa1 is None) != (kappa2 is None):
        raise SpecParseError(detail="--kappa1 and --kappa2 go together")
    family_spec = utils.load_family_spec(spec)
    services = utils.get_services(config)

    family = services.families.build_family(family_spec)
    index_list = utils.parse_indices(indices, family.index_kind == IndexKind.INTEGER)
    kappas = (kappa1, kappa2) if kappa1 is not None else None
    report = services.metrics.convergence_report(family, index_list, B=B, grid=config.cgrid, kappas=kappas,
                                                 defect_tolerance=defect_tol)
    export = services.export
    export.write(export.render_json(export.report_document(report)), out)

    if report.failed_checks:
        logger.error(f"{family.label}: {', '.join(report.failed_checks)}")
        raise typer.Exit(code=int(ExitCode.VERIFICATION))
