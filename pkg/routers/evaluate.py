from pathlib import Path
from typing import Optional

import typer

from schemas.run_config import Command, OutputFormat
from routers import utils

router = typer.Typer()


@router.command("eval")
@utils.exit_on_error
def cmd_eval(
    spec: Path = typer.Option(..., "--spec", help="Family spec JSON file."),
    grid: Optional[str] = typer.Option(None, "--grid", help="Real grid xmin:xmax:n."),
    cgrid: Optional[str] = typer.Option(None, "--cgrid", help="Complex polar grid rmax:nr:na."),
    index: Optional[str] = typer.Option(None, "--index", help="Overrides params.n or params.delta."),
    precision: int = typer.Option(128, "--precision", help="Working precision in bits."),
    out: Optional[Path] = typer.Option(None, "--out"),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
    max_panels: Optional[int] = typer.Option(None, "--max-panels"),
) -> None:
    """Sample one family member on a real or complex grid."""
    config = utils.run_config(Command.EVAL, spec_path=spec, precision_bits=precision, output=out,
                              format=output_format, grid=utils.parse_grid(grid), cgrid=utils.parse_cgrid(cgrid),
                              rel_tol=rel_tol, max_panels=max_panels)
    utils.require_grid(config.grid, config.cgrid)
    family_spec = utils.load_family_spec(spec)
    services = utils.get_services(config)

    evaluator = services.families.build_evaluator(family_spec, index)
    params = family_spec.params
    what = f"{family_spec.construction.value} index {index or params.get('n', params.get('delta'))}"
    text = utils.render_samples(services, evaluator, config.grid, config.cgrid, output_format, what)
    services.export.write(text, out)
