"""Pydantic request/response models for the verification service."""

from pydantic import BaseModel, Field


class GridParams(BaseModel):
    n: int = 3
    node_count: int = 2048
    r_max: float = 1.0e4


class ConstantsRequest(BaseModel):
    n: int = 3


class DeficitRequest(GridParams):
    functional: str = "all"        # hls | sobolev | ccl | all
    eps: float = 0.1
    mode: int = 2
    seed: int = 0


class GapRequest(GridParams):
    K: int = 8
    trials: int = 0
    seed: int = 0


class RucRequest(GridParams):
    K: int = 8
    eps: list[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    trials: int = 50
    seed: int = 0


class StarRequest(GridParams):
    K: int = 8
    trials: int = 50
    seed: int = 0
    eta: float | None = None       # None: measure eta* per input, use eta*/2


class PropRequest(GridParams):
    K: int = 8
    trials: int = 100
    seed: int = 0


class ProjectRequest(GridParams):
    mu: float = 1.0
    sigma: float = 1.0
    eps: float = 0.0
    mode: int = 2


class FlowRequest(GridParams):
    eps: float = 0.1
    mode: int = 2
    horizon: float = 0.08
    dt: float | None = None
    samples: int = 17
    tol_derivative: float = 0.01   # flow-identity only
    tol_integral: float = 0.02     # flow-identity only


class CclProbeRequest(GridParams):
    eps: float = 0.1
    mode: int = 2
    beta: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    horizon: float = 1.0
    samples: int = 17


class DualityRequest(GridParams):
    K: int = 8
    trials: int = 100
    seed: int = 0


class SuiteResponse(BaseModel):
    command: str
    passed: bool
    counts: dict[str, int]
    notes: list[str] = Field(default_factory=list)
    rows: list[dict]


class HealthResponse(BaseModel):
    status: str
    version: str
