import functools
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional

import simplejson
import typer
from pydantic import ValidationError

from schemas.run_config import ComplexGrid, FamilySpec, OutputFormat, RealGrid, RunConfig, SymbolSpec
from schemas.superoscillation import EntireSymbol, QuadratureSpec
from services.evolution_service import EvolutionService, get_evolution_service
from services.exceptions import ExitCode, NearZeroSignal, NumericOverflow, SpecParseError, SuperoscException
from services.export_service import (
    COMPLEX_SAMPLE_HEADER,
    REAL_SAMPLE_HEADER,
    ExportService,
    get_export_service,
)
from services.family_service import FamilyService, get_family_service
from services.identity_service import IdentityService, get_identity_service
from services.measure_service import MeasureService, get_measure_service
from services.metrics_service import MetricsService, get_metrics_service
from services.numerics_service import NumericsService, get_numerics_service

logger = logging.getLogger(__name__)


class Services(NamedTuple):
    numerics: NumericsService
    measures: MeasureService
    families: FamilyService
    evolution: EvolutionService
    metrics: MetricsService
    identity: IdentityService
    export: ExportService


def get_services(config: RunConfig) -> Services:
    """Wire every service at the requested precision, sharing one quadrature configuration."""
    numerics = get_numerics_service(config.precision_bits)
    overrides = {}
    if config.rel_tol is not None:
        overrides["rel_tol"] = config.rel_tol
    if config.max_panels is not None:
        overrides["max_panels"] = config.max_panels
    measures = get_measure_service(numerics, QuadratureSpec(**overrides))
    families = get_family_service(numerics, measures)
    return Services(
        numerics=numerics,
        measures=measures,
        families=families,
        evolution=get_evolution_service(numerics, measures),
        metrics=get_metrics_service(numerics, measures),
        identity=get_identity_service(numerics, families),
        export=get_export_service(numerics),
    )


def exit_on_error(command: Callable[..., Any]) -> Callable[..., Any]:
    """Map domain errors to exit codes after logging them."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except SuperoscException as e:
            logger.error(str(e))
            raise typer.Exit(code=int(e.exit_code))
        except ValidationError as e:
            logger.error(f"invalid construction input: {e}")
            raise typer.Exit(code=int(ExitCode.PRECONDITION))

    return wrapper


def run_config(command: str, **fields: Any) -> RunConfig:
    try:
        return RunConfig(command=command, **fields)
    except ValidationError as e:
        raise SpecParseError(detail=f"invalid options: {e}")


def load_family_spec(path: Path) -> FamilySpec:
    document = ExportService.load_json(path)
    try:
        return FamilySpec.model_validate(document)
    except ValidationError as e:
        raise SpecParseError(detail=f"{path} is not a family spec: {e}")


def load_symbol(families: FamilyService, value: str, a: Optional[float] = None) -> EntireSymbol:
    """--symbol takes inline JSON or a path to a JSON file."""
    if value.lstrip().startswith("{"):
        try:
            document = simplejson.loads(value, use_decimal=True)
        except simplejson.JSONDecodeError as e:
            raise SpecParseError(detail=f"--symbol is not valid JSON: {e}")
    else:
        document = ExportService.load_json(Path(value))
    try:
        spec = SymbolSpec.model_validate(document)
    except ValidationError as e:
        raise SpecParseError(detail=f"not a symbol spec: {e}")
    return families.symbols.from_spec(spec.as_document(), a=a)


def parse_grid(text: Optional[str]) -> Optional[RealGrid]:
    if text is None:
        return None
    try:
        return RealGrid.parse(text)
    except (ValueError, ValidationError) as e:
        raise SpecParseError(detail=f"--grid expects xmin:xmax:n, got {text!r} ({e})")


def parse_cgrid(text: Optional[str]) -> Optional[ComplexGrid]:
    if text is None:
        return None
    try:
        return ComplexGrid.parse(text)
    except (ValueError, ValidationError) as e:
        raise SpecParseError(detail=f"--cgrid expects rmax:nr:na, got {text!r} ({e})")


def parse_indices(text: str, integer: bool) -> List[Any]:
    try:
        return [int(item) if integer else float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise SpecParseError(detail=f"--indices expects a comma separated list, got {text!r}")


def require_grid(grid: Optional[RealGrid], cgrid: Optional[ComplexGrid]) -> None:
    if (grid is None) == (cgrid is None):
        raise SpecParseError(detail="exactly one of --grid and --cgrid is required")


def render_samples(
    services: Services,
    evaluator: Callable[[Any], Any],
    grid: Optional[RealGrid],
    cgrid: Optional[ComplexGrid],
    output_format: OutputFormat,
    what: str,
    extra: Optional[Dict[str, Any]] = None,
) -> str:
    """Sample rows for a real or complex grid; local_k is blank where the signal is too small."""
    require_grid(grid, cgrid)
    export = services.export
    rows = []
    if grid is not None:
        header = REAL_SAMPLE_HEADER
        step = grid.spacing / 10
        for x in grid.points():
            value = _sample(evaluator, x, what)
            try:
                local_k = services.metrics.local_wavenumber(evaluator, x, step)
            except NearZeroSignal as e:
                logger.debug(f"local wavenumber refused: {e}")
                local_k = None
            rows.append(export.real_sample_row(x, value, local_k))
    else:
        header = COMPLEX_SAMPLE_HEADER
        for z in services.metrics.grid_points(cgrid):
            rows.append(export.complex_sample_row(z, _sample(evaluator, z, what)))

    if output_format == OutputFormat.CSV:
        return export.render_csv(header, rows)
    return export.render_json({**(extra or {}), "columns": list(header), "rows": rows})


def _sample(evaluator: Callable[[Any], Any], z: Any, what: str) -> Any:
    try:
        return evaluator(z)
    except NumericOverflow as e:
        raise NumericOverflow(detail=f"{what} at z={z}: {e.detail}", witness=e.witness)
