"""Report records shared by the deficit functionals and the verifiers."""

import math
from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"
EXPLORATORY = "exploratory"     # residual-only reports, never pass/fail


@dataclass(frozen=True)
class DeficitReport:
    """Value of a deficit functional together with the pieces entering it.

    value = lhs - rhs exactly as computed; quad_error is the certified
    quadrature error, so a proven-nonnegative deficit must satisfy
    value >= -quad_error.
    """

    value: float
    lhs: float
    rhs: float
    norms_used: dict
    quad_error: float

    @property
    def nonnegative_within_error(self) -> bool:
        return self.value >= -self.quad_error


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of a two-sided inequality check.

    margin is the slack of the asserted inequality (lhs >= rhs checks store
    lhs - rhs, upper-bound checks store rhs - lhs), so in every orientation
    pass <=> margin >= -quad_error.  status is 'pass', 'fail' or
    'not-applicable' (hypothesis of the statement unmet -- never counted as
    a failure).
    """

    lhs: float
    rhs: float
    margin: float
    passed: bool
    status: str
    params: dict = field(default_factory=dict)

    @property
    def quad_error(self) -> float:
        return self.params.get("quad_error", 0.0)


def make_verdict(lhs: float, rhs: float, margin: float, quad_error: float,
                 **params) -> StabilityVerdict:
    params = dict(params)
    params["quad_error"] = quad_error
    ok = margin >= -quad_error
    return StabilityVerdict(lhs=lhs, rhs=rhs, margin=margin, passed=ok,
                            status=PASS if ok else FAIL, params=params)


def not_applicable(lhs: float = math.nan, rhs: float = math.nan,
                   **params) -> StabilityVerdict:
    return StabilityVerdict(lhs=lhs, rhs=rhs, margin=math.nan, passed=False,
                            status=NOT_APPLICABLE, params=dict(params))
