import logging
from typing import Any, List, Optional, Sequence

import numpy as np

from schemas.superoscillation import IdentityCase, IdentityCheckName, IdentityCheckResult
from services.family_service import FamilyService, get_family_service
from services.numerics_service import NumericsService, get_numerics_service

logger = logging.getLogger(__name__)

DEFAULT_BESSEL_B = (0.5, 1.0, 2.0)
DEFAULT_IDENTITY_Z = (0, 1, 2j, 3 + 1j)
DEFAULT_LEMMA31_A = (1.5, 2.0, 4.0)
DEFAULT_DELTAS = (1.0, 0.5)
COR33_Z = (0, 1, 1j, 2 + 1j)


def upper_sqrt(w: np.ndarray) -> np.ndarray:
    """Vectorized square root with argument in [0, pi)."""
    root = np.sqrt(w.astype(complex))
    flip = (root.imag < 0) | ((root.imag == 0) & (root.real < 0))
    return np.where(flip, -root, root)


def lemma31_quotient(z: np.ndarray, a: float) -> np.ndarray:
    """|sqrt(z^2 - 2iaz - 1) + az - i| / min(|z|, |z|^2)."""
    modulus = np.abs(z)
    return np.abs(upper_sqrt(z * z - 2j * a * z - 1) + a * z - 1j) / np.minimum(modulus, modulus ** 2)


class IdentityService:
    """Numeric identity and inequality suites behind the identity-check command."""

    def __init__(self, numerics: NumericsService, families: FamilyService):
        self.numerics = numerics
        self.families = families

    def run(self, name: IdentityCheckName, seed: int = 0) -> IdentityCheckResult:
        if name == IdentityCheckName.LEMMA_A1:
            return self.lemma_a1(seed=seed)
        if name == IdentityCheckName.LEMMA_A2:
            return self.lemma_a2()
        if name == IdentityCheckName.LEMMA_31:
            return self.lemma_31(seed=seed)
        return self.cor_33()

    def lemma_a1(self, samples: int = 10_000, radius: float = 10.0, seed: int = 0) -> IdentityCheckResult:
        """|e^{z1} - e^{z2}| <= |z1 - z2| e^{max(|z1|, |z2|)} on random pairs in the disk."""
        rng = np.random.default_rng(seed)
        z1, z2 = self._disk(rng, samples, radius), self._disk(rng, samples, radius)
        lhs = np.abs(np.exp(z1) - np.exp(z2))
        rhs = np.abs(z1 - z2) * np.exp(np.maximum(np.abs(z1), np.abs(z2)))
        ratio = np.divide(lhs, rhs, out=np.zeros_like(lhs), where=rhs > 0)
        violations = lhs > rhs * (1 + 1e-12)
        worst = int(np.argmax(ratio))
        case = IdentityCase(
            label=f"{samples} pairs, |z| <= {radius:g}",
            max_error=float(ratio[worst]),
            tolerance=1.0 + 1e-12,
            samples=samples,
            violations=int(violations.sum()),
            witness=f"z1={z1[worst]:.6g}, z2={z2[worst]:.6g}" if violations.any() else None,
        )
        return IdentityCheckResult(name=IdentityCheckName.LEMMA_A1, cases=[case])

    def lemma_a2(
        self,
        bs: Sequence[float] = DEFAULT_BESSEL_B,
        zs: Sequence[Any] = DEFAULT_IDENTITY_Z,
        tolerance: float = 1e-8,
    ) -> IdentityCheckResult:
        """sinc(sqrt(z^2 + b^2)) = (1/2) int_{-1}^{1} e^{ikz} J0(b sqrt(1-k^2)) dk."""
        measures = self.families.measures
        ctx = self.numerics.ctx
        cases = []
        for b in bs:
            kernel = measures.builtin_density("bessel_kernel", {"b": b})
            errors = []
            for z in zs:
                z_mp = ctx.mpc(self.numerics.convert(z, ctx))
                expected = self.numerics.sinc_of_sqrt(z_mp * z_mp + ctx.mpf(b) ** 2, ctx)
                actual = measures.eval_transform(kernel, z_mp)
                errors.append((self._relative(actual, expected), z))
            cases.append(self._case(f"b={b:g}", errors, tolerance))
        return IdentityCheckResult(name=IdentityCheckName.LEMMA_A2, cases=cases)

    def lemma_31(
        self,
        targets: Sequence[float] = DEFAULT_LEMMA31_A,
        n_radii: int = 50,
        n_angles: int = 128,
        samples: int = 1000,
        seed: int = 0,
    ) -> IdentityCheckResult:
        """Fit C on a dense grid of |z| <= 1, then validate it on random 1 < |z| <= 50."""
        rng = np.random.default_rng(seed)
        radii = np.linspace(1 / n_radii, 1, n_radii)
        angles = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
        grid = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
        cases = []
        for a in targets:
            fitted = float(np.max(lemma31_quotient(grid, a)))
            modulus = rng.uniform(1, 50, samples)
            z = modulus * np.exp(1j * rng.uniform(0, 2 * np.pi, samples))
            quotient = lemma31_quotient(z, a)
            violations = quotient > fitted * (1 + 1e-12)
            worst = int(np.argmax(quotient))
            logger.debug("lemma31 a=%g fitted C=%.6g, validation max %.6g", a, fitted, quotient[worst])
            cases.append(IdentityCase(
                label=f"a={a:g}, C={fitted:.6g}",
                max_error=float(quotient[worst]),
                tolerance=fitted * (1 + 1e-12),
                samples=samples,
                violations=int(violations.sum()),
                witness=f"z={z[worst]:.6g}" if violations.any() else None,
            ))
        return IdentityCheckResult(name=IdentityCheckName.LEMMA_31, cases=cases)

    def cor_33(
        self,
        deltas: Sequence[float] = DEFAULT_DELTAS,
        a: float = 1.5,
        zs: Sequence[Any] = COR33_Z,
        tolerance: float = 1e-8,
    ) -> IdentityCheckResult:
        """Closed form of the sinc family against its Bessel density, plus F(0) = 1 - e^{-2/delta}."""
        ctx = self.numerics.ctx
        cases = []
        for delta in deltas:
            element = self.families.sinc_delta_family(a, delta)
            errors = [
                (self._relative(self.families.measures.eval_transform(element.measure, z), element.closed_form(z)), z)
                for z in zs
            ]
            cases.append(self._case(f"delta={delta:g}, a={a:g}", errors, tolerance))
            at_zero = self._relative(element.closed_form(0), 1 - ctx.exp(-2 / ctx.mpf(delta)))
            cases.append(self._case(f"delta={delta:g}, F(0)", [(at_zero, 0)], 1e-12))
        return IdentityCheckResult(name=IdentityCheckName.COR_33, cases=cases)

    @staticmethod
    def _disk(rng: np.random.Generator, samples: int, radius: float) -> np.ndarray:
        modulus = radius * np.sqrt(rng.uniform(0, 1, samples))
        return modulus * np.exp(1j * rng.uniform(0, 2 * np.pi, samples))

    def _relative(self, actual: Any, expected: Any) -> float:
        ctx = self.numerics.ctx
        actual, expected = ctx.convert(actual), ctx.convert(expected)
        return float(abs(actual - expected) / max(abs(expected), ctx.mpf(2) ** -self.numerics.bits))

    @staticmethod
    def _case(label: str, errors: List[tuple], tolerance: float) -> IdentityCase:
        worst_error, worst_z = max(errors, key=lambda item: item[0])
        violations = sum(1 for error, _ in errors if error > tolerance)
        return IdentityCase(
            label=label,
            max_error=worst_error,
            tolerance=tolerance,
            samples=len(errors),
            violations=violations,
            witness=f"z={worst_z}" if violations else None,
        )


def get_identity_service(
    numerics: Optional[NumericsService] = None,
    families: Optional[FamilyService] = None,
) -> IdentityService:
    numerics = numerics or get_numerics_service()
    return IdentityService(numerics, families or get_family_service(numerics))
