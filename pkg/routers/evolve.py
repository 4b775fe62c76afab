import logging
from pathlib import Path
from typing import Any, Dict, Optional

import typer

from schemas.run_config import Command, Construction, EvolveMode, OutputFormat
from routers import utils

logger = logging.getLogger(__name__)

router = typer.Typer()


@router.command("evolve")
@utils.exit_on_error
def cmd_evolve(
    spec: Path = typer.Option(..., "--spec", help="Family spec JSON file."),
    symbol: str = typer.Option(..., "--symbol", help="Symbol spec, inline JSON or a JSON file."),
    mode: EvolveMode = typer.Option(EvolveMode.PROPAGATE, "--mode"),
    t: float = typer.Option(0.0, "--t", help="Evolution time for --mode propagate."),
    grid: Optional[str] = typer.Option(None, "--grid", help="Real grid xmin:xmax:n."),
    cgrid: Optional[str] = typer.Option(None, "--cgrid", help="Complex polar grid rmax:nr:na."),
    index: Optional[str] = typer.Option(None, "--index", help="Overrides params.n or params.delta."),
    precision: int = typer.Option(128, "--precision", help="Working precision in bits."),
    out: Optional[Path] = typer.Option(None, "--out"),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
    max_panels: Optional[int] = typer.Option(None, "--max-panels"),
) -> None:
    """Samples of U_t F, or of the first or second derived family."""
    config = utils.run_config(Command.EVOLVE, spec_path=spec, precision_bits=precision, output=out,
                              format=output_format, grid=utils.parse_grid(grid), cgrid=utils.parse_cgrid(cgrid),
                              rel_tol=rel_tol, max_panels=max_panels)
    utils.require_grid(config.grid, config.cgrid)
    family_spec = utils.load_family_spec(spec)
    services = utils.get_services(config)
    families, evolution, measures = services.families, services.evolution, services.measures

    a = float(family_spec.a) if family_spec.a is not None else None
    weight = utils.load_symbol(families, symbol, a=a)
    if family_spec.construction == Construction.INTERPOLATION:
        measure, target = families.build_interpolation(family_spec).measure, a
    else:
        element = families.build_element(family_spec, index)
        measure, target = element.measure, element.target

    extra: Dict[str, Any] = {"mode": mode.value, "symbol": weight.label}
    if mode == EvolveMode.PROPAGATE:
        propagated = evolution.propagate(measure, weight, t)
        evaluator = lambda z: evolution.evaluate(propagated, z)
        extra["t"] = repr(t)
    elif mode == EvolveMode.ONE:
        derived = evolution.family_one(measure, weight, target)
        evaluator = lambda z: measures.eval_transform(derived, z)
    else:
        derived = evolution.family_two(measure, weight, target)
        evaluator = lambda z: measures.eval_transform(derived, z)
        new_target = evolution.derived_target(weight, target)
        extra["band"] = repr(weight.band_image_bound)
        extra["target"] = repr(new_target)
        typer.echo(f"band h0={weight.band_image_bound:g} target H(a)={new_target:.17g}", err=True)

    text = utils.render_samples(services, evaluator, config.grid, config.cgrid, output_format,
                                f"{mode.value} evolution of {family_spec.construction.value}", extra=extra)
    services.export.write(text, out)
