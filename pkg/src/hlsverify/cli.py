"""Command-line front end: a thin client of the verification service.

By default requests are served in-process (no network); --server points the
same client at a remote instance.  Each run writes `<command>.csv` with a
fixed column order (floats at 17 significant digits, LF line endings, no
timestamps, so identical configs and seeds give byte-identical files) plus a
human-readable `<command>_summary.txt`.

Exit status: 0 if every verdict passed or was not-applicable/exploratory,
1 on any failed verdict, 2 on usage or input errors.

Config files are flat `key=value` text (comments with '#'); command-line
flags override file values; unknown keys are rejected.
"""

import argparse
import csv
import math
import sys
import time
from pathlib import Path

COLUMNS = {
    "constants": ["n", "S_n", "C_n", "kappa_n", "ustar_p_norm_p"],
    "deficit": ["functional", "input", "value", "lhs", "rhs", "quad_error",
                "status"],
    "gap": ["k", "mu_k", "quotient", "bound", "pass"],
    "verify-ruc": ["trial", "eps", "lhs", "rhs", "margin", "quad_error",
                   "ratio", "status"],
    "verify-star": ["trial", "eps", "eta", "eta_star", "quotient", "bound",
                    "margin", "status"],
    "verify-prop": ["trial", "K", "X", "Y", "margin_X", "margin_Y",
                    "margin_norm", "status"],
    "project": ["mu_in", "sigma_in", "eps", "mode", "mu", "sigma", "distance",
                "naive_distance", "status"],
    "flow-identity": ["t", "deficit", "rate", "status"],
    "flow-monotone": ["t", "deficit", "error", "status"],
    "ccl-probe": ["beta", "lhs", "rhs", "residual", "status"],
    "duality": ["trial", "lhs", "rhs", "margin", "square_agreement", "status"],
}

ENDPOINTS = {
    "constants": "/constants",
    "deficit": "/deficit",
    "gap": "/gap",
    "verify-ruc": "/verify/ruc",
    "verify-star": "/verify/star",
    "verify-prop": "/verify/prop",
    "project": "/project",
    "flow-identity": "/flow/identity",
    "flow-monotone": "/flow/monotone",
    "ccl-probe": "/flow/ccl-probe",
    "duality": "/duality",
}

# config-file keys accepted per command (flat key=value, flags override)
_GRID_KEYS = {"n", "node_count", "r_max", "out", "server"}
CONFIG_KEYS = {
    "constants": {"n", "out", "server"},
    "deficit": _GRID_KEYS | {"functional", "eps", "mode", "seed"},
    "gap": _GRID_KEYS | {"K", "trials", "seed"},
    "verify-ruc": _GRID_KEYS | {"K", "eps", "trials", "seed"},
    "verify-star": _GRID_KEYS | {"K", "trials", "seed", "eta"},
    "verify-prop": _GRID_KEYS | {"K", "trials", "seed"},
    "project": _GRID_KEYS | {"mu", "sigma", "eps", "mode"},
    "flow-identity": _GRID_KEYS | {"eps", "mode", "horizon", "dt", "samples",
                                   "tol_derivative", "tol_integral"},
    "flow-monotone": _GRID_KEYS | {"eps", "mode", "horizon", "dt", "samples"},
    "ccl-probe": _GRID_KEYS | {"eps", "mode", "beta", "horizon", "samples"},
    "duality": _GRID_KEYS | {"K", "trials", "seed"},
}


class UsageError(Exception):
    pass


def parse_config_file(path: str, allowed: set) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in allowed:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r} for this "
                             f"command (accepted: {', '.join(sorted(allowed))})")
        values[key] = _parse_value(value.strip())
    return values


def _parse_value(text: str):
    if text.lower() in ("none", ""):
        return None
    if "," in text:
        return [_parse_scalar(part.strip()) for part in text.split(",")]
    return _parse_scalar(text)


def _parse_scalar(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, command: str, rows: list) -> None:
    columns = COLUMNS[command]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if command == "gap":
                row = dict(row, **{"pass": row.get("status") == "pass"})
            writer.writerow([_format(row.get(col)) for col in columns])


def write_summary(path: Path, command: str, config: dict, payload: dict,
                  exit_code: int) -> None:
    lines = [f"command: {command}",
             f"timestamp: {time.strftime('%Y-%m-%d %H:%M:%S')}",
             "config:"]
    lines += [f"  {k}={config[k]}" for k in sorted(config)]
    lines.append(f"rows: {len(payload['rows'])}")
    lines.append("counts: " + ", ".join(
        f"{k}={v}" for k, v in sorted(payload["counts"].items())))
    for note in payload.get("notes", []):
        lines.append(f"note: {note}")
    lines.append(f"exit: {exit_code}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class ServiceClient:
    """POSTs to a remote server when given a URL, otherwise serves the
    application in-process over an ASGI transport (no network)."""

    def __init__(self, server: str | None):
        self.server = server

    def post(self, endpoint: str, payload: dict) -> dict:
        import httpx
        if self.server:
            with httpx.Client(base_url=self.server, timeout=3600.0) as client:
                response = client.post(endpoint, json=payload)
        else:
            import asyncio
            from .service import app

            async def _post():
                transport = httpx.ASGITransport(app=app)
                async with httpx.AsyncClient(transport=transport,
                                             base_url="http://hlsverify",
                                             timeout=3600.0) as client:
                    return await client.post(endpoint, json=payload)

            response = asyncio.run(_post())
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise UsageError(
                f"service rejected the request ({response.status_code}): {detail}")
        return response.json()


def _add_common(parser, grid=True):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    parser.add_argument("--out", help="output directory (default: .)")
    parser.add_argument("--n", type=int, help="space dimension (>= 3)")
    if grid:
        parser.add_argument("--node-count", dest="node_count", type=int)
        parser.add_argument("--r-max", dest="r_max", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hlsverify",
        description="Verify sharp HLS/Sobolev inequality deficits, spectral "
                    "gaps, flow identities and local stability bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="sharp constants for dimension n")
    _add_common(p, grid=False)

    p = sub.add_parser("deficit", help="deficit functionals at optimizers "
                                       "and a perturbed input")
    _add_common(p)
    p.add_argument("--functional", choices=["hls", "sobolev", "ccl", "all"])
    p.add_argument("--eps", type=float)
    p.add_argument("--mode", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("gap", help="spectral-gap quotients per mode")
    _add_common(p)
    p.add_argument("--K", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("verify-ruc", help="uniform local stability suite")
    _add_common(p)
    p.add_argument("--K", type=int)
    p.add_argument("--eps", type=str, help="comma-separated epsilon list")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("verify-star", help="weighted-norm stability suite")
    _add_common(p)
    p.add_argument("--K", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eta", type=float, help="fixed eta (default: eta*/2 "
                                             "measured per input)")

    p = sub.add_parser("verify-prop", help="smallness-proposition suite")
    _add_common(p)
    p.add_argument("--K", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("project", help="project onto the optimizer scalings")
    _add_common(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--mode", type=int)

    for name, help_text in (("flow-identity", "fast-diffusion deficit "
                                              "dissipation identity"),
                            ("flow-monotone", "deficit monotonicity along "
                                              "the flow")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--eps", type=float)
        p.add_argument("--mode", type=int)
        p.add_argument("--horizon", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--samples", type=int)
        if name == "flow-identity":
            p.add_argument("--tol-derivative", dest="tol_derivative",
                           type=float)
            p.add_argument("--tol-integral", dest="tol_integral", type=float)

    p = sub.add_parser("ccl-probe", help="exploratory integral "
                                         "representation probe")
    _add_common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--mode", type=int)
    p.add_argument("--beta", type=str, help="comma-separated beta grid")
    p.add_argument("--horizon", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("duality", help="duality square bound suite")
    _add_common(p)
    p.add_argument("--K", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _merge_config(args) -> dict:
    command = args.command
    allowed = CONFIG_KEYS[command]
    config = {}
    if getattr(args, "config", None):
        config.update(parse_config_file(args.config, allowed))
    for key in allowed:
        flag = getattr(args, key, None)
        if flag is not None:
            config[key] = flag
    # comma-separated list flags
    for key in ("eps", "beta"):
        if isinstance(config.get(key), str):
            config[key] = _parse_value(config[key])
    return config


def _payload(command: str, config: dict) -> dict:
    payload = {k: v for k, v in config.items()
               if k not in ("out", "server", "config")}
    if command == "verify-ruc" and "eps" in payload \
            and not isinstance(payload["eps"], list):
        payload["eps"] = [payload["eps"]]
    if command == "ccl-probe" and "beta" in payload \
            and not isinstance(payload["beta"], list):
        payload["beta"] = [payload["beta"]]
    return payload


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn
        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    try:
        config = _merge_config(args)
        client = ServiceClient(config.get("server"))
        payload = client.post(ENDPOINTS[args.command],
                              _payload(args.command, config))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(config.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    exit_code = 0 if payload["passed"] else 1
    write_csv(out_dir / f"{args.command}.csv", args.command, payload["rows"])
    write_summary(out_dir / f"{args.command}_summary.txt", args.command,
                  config, payload, exit_code)

    counts = payload["counts"]
    print(f"{args.command}: {counts.get('pass', 0)} pass, "
          f"{counts.get('fail', 0)} fail, "
          f"{counts.get('not-applicable', 0)} not-applicable, "
          f"{counts.get('exploratory', 0)} exploratory "
          f"-> exit {exit_code}")
    return exit_code


if __name__ == "__main__":
    raise SystemExit(main())
