"""FastAPI service wrapping the verification suites.

Every endpoint is a thin adapter: validate the request model, call the
corresponding suite, serialise the rows.  Precondition violations surface
as HTTP 400 with the module's error text.
"""

from fastapi import FastAPI, HTTPException

from .. import __version__, suites
from ..errors import ConvergenceError, InputError
from .schemas import (CclProbeRequest, ConstantsRequest, DeficitRequest,
                      DualityRequest, FlowRequest, GapRequest, HealthResponse,
                      ProjectRequest, PropRequest, RucRequest, StarRequest,
                      SuiteResponse)

app = FastAPI(
    title="hlsverify",
    description="Numerical verification of sharp HLS/Sobolev inequalities, "
                "spectral gaps, fast-diffusion flow identities and local "
                "stability bounds on radial data.",
    version=__version__,
)


def _run(fn, *args, **kwargs) -> SuiteResponse:
    try:
        result = fn(*args, **kwargs)
    except InputError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    except ConvergenceError as exc:
        raise HTTPException(status_code=500, detail=str(exc))
    return SuiteResponse(command=result.command, passed=result.passed,
                         counts=result.counts, notes=result.notes,
                         rows=[{k: v for k, v in row.items()}
                               for row in result.rows])


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)


@app.post("/constants", response_model=SuiteResponse)
def constants(req: ConstantsRequest):
    return _run(suites.constants_suite, req.n)


@app.post("/deficit", response_model=SuiteResponse)
def deficit(req: DeficitRequest):
    return _run(suites.deficit_suite, req.n, req.node_count, req.r_max,
                req.functional, req.eps, req.mode, req.seed)


@app.post("/gap", response_model=SuiteResponse)
def gap(req: GapRequest):
    return _run(suites.gap_suite, req.n, req.node_count, req.r_max, req.K,
                req.trials, req.seed)


@app.post("/verify/ruc", response_model=SuiteResponse)
def verify_ruc(req: RucRequest):
    return _run(suites.ruc_suite, req.n, req.eps, req.trials, req.seed,
                req.node_count, req.r_max, req.K)


@app.post("/verify/star", response_model=SuiteResponse)
def verify_star(req: StarRequest):
    return _run(suites.star_suite, req.n, req.trials, req.seed, req.eta,
                req.node_count, req.r_max, req.K)


@app.post("/verify/prop", response_model=SuiteResponse)
def verify_prop(req: PropRequest):
    return _run(suites.prop_suite, req.n, req.trials, req.seed,
                req.node_count, req.r_max, req.K)


@app.post("/project", response_model=SuiteResponse)
def project(req: ProjectRequest):
    return _run(suites.project_suite, req.n, req.mu, req.sigma, req.eps,
                req.mode, req.node_count, req.r_max)


@app.post("/flow/identity", response_model=SuiteResponse)
def flow_identity(req: FlowRequest):
    return _run(suites.flow_identity_suite, req.n, req.eps, req.mode,
                req.horizon, req.dt, req.samples, req.node_count, req.r_max,
                req.tol_derivative, req.tol_integral)


@app.post("/flow/monotone", response_model=SuiteResponse)
def flow_monotone(req: FlowRequest):
    return _run(suites.flow_monotone_suite, req.n, req.eps, req.mode,
                req.horizon, req.dt, req.samples, req.node_count, req.r_max)


@app.post("/flow/ccl-probe", response_model=SuiteResponse)
def flow_ccl_probe(req: CclProbeRequest):
    return _run(suites.ccl_probe_suite, req.n, req.beta, req.horizon,
                req.samples, req.node_count, req.r_max, req.eps, req.mode)


@app.post("/duality", response_model=SuiteResponse)
def duality(req: DualityRequest):
    return _run(suites.duality_suite, req.n, req.trials, req.seed,
                req.node_count, req.r_max, req.K)
