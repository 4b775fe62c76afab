import csv
import io
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import simplejson
from tabulate import tabulate

from schemas.superoscillation import (
    ConvergenceReport,
    DiscreteMeasure,
    IdentityCheckResult,
    LinearSolution,
)
from services.exceptions import SpecParseError
from services.numerics_service import NumericsService, digits_for_bits, get_numerics_service

logger = logging.getLogger(__name__)

COEFFICIENT_HEADER = ("j", "k_j", "re_C_j", "im_C_j")
REAL_SAMPLE_HEADER = ("x", "re_F", "im_F", "abs_F", "local_k")
COMPLEX_SAMPLE_HEADER = ("re_z", "im_z", "re_F", "im_F")


class ExportService:
    """Text rendering of results: decimal strings sized to the working precision."""

    def __init__(self, numerics: NumericsService):
        self.numerics = numerics

    def decimal(self, value: Any, bits: Optional[int] = None) -> str:
        if value is None:
            return ""
        bits = bits or self.numerics.bits
        ctx = self.numerics.context(bits)
        return ctx.nstr(ctx.mpf(value), digits_for_bits(bits), min_fixed=-4, max_fixed=16)

    def coefficient_rows(self, measure: DiscreteMeasure) -> List[List[str]]:
        bits = measure.precision_bits
        return [
            [str(j), self.decimal(atom.location, bits), self.decimal(atom.weight.real, bits),
             self.decimal(atom.weight.imag, bits)]
            for j, atom in enumerate(measure.atoms)
        ]

    def solution_rows(
        self,
        solution: LinearSolution,
        locations: Optional[Sequence[Any]] = None,
    ) -> List[List[str]]:
        """Coefficient rows; the k_j column stays blank when coefficients multiply powers (ik)^j."""
        bits = solution.precision_bits
        ctx = self.numerics.context(bits)
        rows = []
        for j, c in enumerate(solution.coefficients):
            c = ctx.mpc(c)
            location = "" if locations is None else self.decimal(ctx.re(self.numerics.convert(locations[j], ctx)), bits)
            rows.append([str(j), location, self.decimal(c.real, bits), self.decimal(c.imag, bits)])
        return rows

    def real_sample_row(self, x: Any, value: Any, local_k: Optional[float]) -> List[str]:
        ctx = self.numerics.ctx
        value = ctx.convert(value)
        return [self.decimal(x), self.decimal(ctx.re(value)), self.decimal(ctx.im(value)),
                self.decimal(abs(value)), self.decimal(local_k) if local_k is not None else ""]

    def complex_sample_row(self, z: Any, value: Any) -> List[str]:
        ctx = self.numerics.ctx
        z, value = ctx.convert(z), ctx.convert(value)
        return [self.decimal(ctx.re(z)), self.decimal(ctx.im(z)), self.decimal(ctx.re(value)),
                self.decimal(ctx.im(value))]

    def render_csv(self, header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buffer.getvalue()

    def render_json(self, document: Dict[str, Any]) -> str:
        return simplejson.dumps(document, sort_keys=True, indent=2) + "\n"

    def report_document(self, report: ConvergenceReport) -> Dict[str, Any]:
        document = report.model_dump(mode="json")
        document["sup_estimates"] = [self.decimal(value, 64) for value in report.sup_estimates]
        if report.bound_values is not None:
            document["bound_values"] = [self.decimal(value, 64) for value in report.bound_values]
        document["indices"] = [str(index) for index in report.indices]
        return document

    def identity_document(self, result: IdentityCheckResult) -> Dict[str, Any]:
        return {
            "name": result.name.value,
            "passed": result.passed,
            "cases": [{**case.model_dump(mode="json"), "passed": case.passed} for case in result.cases],
        }

    def identity_table(self, result: IdentityCheckResult) -> str:
        rows = [
            [case.label, f"{case.max_error:.3e}", f"{case.tolerance:.3e}", case.samples, case.violations,
             "ok" if case.passed else "FAIL"]
            for case in result.cases
        ]
        return tabulate(rows, headers=["case", "max error", "tolerance", "samples", "violations", "status"])

    def write(self, text: str, out: Optional[Path]) -> None:
        if out is None:
            sys.stdout.write(text)
            return
        out.write_text(text, encoding="utf-8")
        logger.info("wrote %s", out)

    @staticmethod
    def load_json(path: Path) -> Any:
        try:
            with open(path, encoding="utf-8") as handle:
                return simplejson.load(handle, use_decimal=True)
        except OSError as e:
            raise SpecParseError(detail=f"cannot read {path}: {e}")
        except simplejson.JSONDecodeError as e:
            raise SpecParseError(detail=f"{path} is not valid JSON: {e}")


def get_export_service(numerics: Optional[NumericsService] = None) -> ExportService:
    return ExportService(numerics or get_numerics_service())
