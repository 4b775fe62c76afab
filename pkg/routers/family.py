import logging
from pathlib import Path
from typing import Any, Dict, Optional

import typer

from schemas.run_config import Command, Construction, FamilySpec, OutputFormat
from schemas.superoscillation import DiscreteMeasure, FamilyElement, LinearSolution
from services.exceptions import UnknownDensity
from services.export_service import COEFFICIENT_HEADER
from routers import utils

logger = logging.getLogger(__name__)

router = typer.Typer()


@router.command("family")
@utils.exit_on_error
def cmd_family(
    spec: Path = typer.Option(..., "--spec", help="Family spec JSON file."),
    precision: int = typer.Option(128, "--precision", help="Working precision in bits."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output file, standard output when omitted."),
    output_format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
    index: Optional[str] = typer.Option(None, "--index", help="Overrides params.n or params.delta."),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
    max_panels: Optional[int] = typer.Option(None, "--max-panels"),
) -> None:
    """Dump the coefficients of one family member, or its density metadata."""
    config = utils.run_config(Command.FAMILY, spec_path=spec, precision_bits=precision, output=out,
                              format=output_format, rel_tol=rel_tol, max_panels=max_panels)
    family_spec = utils.load_family_spec(spec)
    services = utils.get_services(config)
    families, export = services.families, services.export

    if family_spec.construction == Construction.INTERPOLATION:
        result = families.build_interpolation(family_spec)
        solution = LinearSolution(coefficients=result.coefficients, condition=result.condition,
                                  precision_bits=result.measure.precision_bits)
        if output_format == OutputFormat.CSV:
            text = export.render_csv(COEFFICIENT_HEADER, export.solution_rows(solution, result.points))
        else:
            text = export.render_json({
                **_spec_document(family_spec),
                "coefficients": export.solution_rows(solution, result.points),
                "residual": export.decimal(result.residual, 64),
                "condition": export.decimal(result.condition, 64),
            })
        export.write(text, out)
        return

    solution = None
    if family_spec.construction == Construction.MOMENT:
        moment = families.build_moment(family_spec, index)
        element, solution = moment.element, moment.solution
    else:
        element = families.build_element(family_spec, index)

    if output_format == OutputFormat.CSV and isinstance(element.measure, DiscreteMeasure):
        text = export.render_csv(COEFFICIENT_HEADER, export.coefficient_rows(element.measure))
    elif output_format == OutputFormat.CSV and solution is not None:
        text = export.render_csv(COEFFICIENT_HEADER, export.solution_rows(solution))
    else:
        if output_format == OutputFormat.CSV:
            logger.info("%s has no coefficient table, writing density metadata", family_spec.construction.value)
        text = export.render_json(_element_document(services, family_spec, element, solution))
    export.write(text, out)


def _spec_document(spec: FamilySpec) -> Dict[str, Any]:
    return {"construction": spec.construction.value, "a": str(spec.a), "k0": str(spec.k0)}


def _element_document(
    services: utils.Services,
    spec: FamilySpec,
    element: FamilyElement,
    solution: Optional[LinearSolution],
) -> Dict[str, Any]:
    export = services.export
    document = {
        **_spec_document(spec),
        "index": str(element.index),
        "band": export.decimal(element.band, 64),
        "target": export.decimal(element.target, 64),
    }
    try:
        document["measure"] = services.measures.to_document(element.measure)
    except UnknownDensity:
        document["measure"] = {"variant": element.measure.variant.value}
    if solution is not None:
        document["coefficients"] = export.solution_rows(solution)
        if solution.condition is not None:
            document["condition"] = export.decimal(solution.condition, 64)
    return document
