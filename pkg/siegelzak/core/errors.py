import logging
from typing import Any, Optional

logger = logging.getLogger("siegelzak")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


class SiegelZakError(Exception):
    exit_code: int = EXIT_FAIL

    def __init__(self, detail: str = "Computation error occurred"):
        logger.error(f"{type(self).__name__}: {detail}")
        self.detail = detail
        super().__init__(detail)


class ConfigError(SiegelZakError):
    exit_code = EXIT_CONFIG


class DimensionMismatchError(SiegelZakError):
    def __init__(self, expected: int, got: int, what: str = "vector"):
        super().__init__(f"{what} has dimension {got}, expected {expected}")


class EmptySampleError(SiegelZakError):
    def __init__(self):
        super().__init__("Cannot summarise an empty sample sequence")


class EnumerationCapError(SiegelZakError):
    def __init__(self, candidates: int, cap: int):
        super().__init__(
            f"Coefficient search box holds {candidates} candidates (cap: {cap})"
        )


class DegenerateRegionError(SiegelZakError):
    def __init__(self, detail: str = "Region has zero volume"):
        super().__init__(detail)


class UnderCoveredError(SiegelZakError):
    def __init__(self, support: Any, covered: Any):
        super().__init__(
            f"Test function support {support} is not covered by region {covered}"
        )


class PsiUndefinedError(SiegelZakError):
    def __init__(self, where: Any, reason: str = "evaluation failed"):
        self.where = where
        super().__init__(f"Eigenfunction undefined at {where}: {reason}")


class UnsupportedModeError(SiegelZakError):
    pass


class RejectionCapError(SiegelZakError):
    def __init__(self, cap: int):
        super().__init__(f"Rejection sampler exhausted {cap} attempts")


class TailBoundError(SiegelZakError):
    pass


class SectionError(SiegelZakError):
    def __init__(self, detail: str = "Sample is not in the cross section: P ∩ H is empty"):
        super().__init__(detail)


class FolnerExclusionError(SiegelZakError):
    def __init__(self, fraction: float, limit: float):
        self.fraction = fraction
        super().__init__(
            f"Excluded Følner translates: {fraction:.4f} (limit: {limit:.4f})"
        )


class ProductConditionError(SiegelZakError):
    def __init__(self, witness: Optional[dict] = None, detail: Optional[str] = None):
        self.witness = witness
        super().__init__(detail or f"Product condition fails, witness: {witness}")


class CharacterError(SiegelZakError):
    pass


class CoveringError(SiegelZakError):
    pass


class ProjectionError(SiegelZakError):
    def __init__(self, relation: Any):
        self.relation = relation
        super().__init__(f"Physical projection is not injective on the lattice: B_phys·{relation} = 0")
