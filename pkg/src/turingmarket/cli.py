"""Command-line client.

Each subcommand loads a JSON run configuration, executes the matching
service handler (in-process by default, or against a remote service via
--server), prints the main JSON report to stdout and writes the artifacts
into the output directory.

Exit codes: 0 analysis completed (any verdict), 2 invalid configuration,
3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx
from pydantic import ValidationError

from . import service
from .errors import ConfigError, DomainError, NumericalError
from .schemas import RunConfig, SweepRequest
from .serialize import json_text

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(path: str, seed: int | None) -> RunConfig:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    if seed is not None:
        cfg = cfg.model_copy(update={"sim": cfg.sim.model_copy(update={"seed": seed})})
    return cfg


def _post_remote(server: str, endpoint: str, payload: dict) -> dict:
    response = httpx.post(server.rstrip("/") + "/" + endpoint, json=payload, timeout=None)
    if response.status_code >= 500:
        raise NumericalError(f"service error {response.status_code}: {response.text}")
    if response.status_code >= 400:
        raise ConfigError(f"service rejected the request ({response.status_code}): {response.text}")
    return response.json()


def _dispatch(args, endpoint: str, cfg: RunConfig) -> dict:
    if args.server:
        return _post_remote(args.server, endpoint, cfg.model_dump(mode="json"))
    handler = {
        "analyze": service.run_analyze,
        "dispersion": service.run_dispersion,
        "patch-check": service.run_patch_check,
        "simulate": service.run_simulate,
    }[endpoint]
    return handler(cfg).model_dump(mode="json")


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(payload: dict) -> None:
    sys.stdout.write(json_text(payload))


def cmd_analyze(args) -> int:
    cfg = _load_config(args.config, args.seed)
    report = _dispatch(args, "analyze", cfg)
    (_out_dir(args, cfg) / "report.json").write_text(json_text(report))
    _emit(report)
    return EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = _load_config(args.config, args.seed)
    resp = _dispatch(args, "dispersion", cfg)
    out = _out_dir(args, cfg)
    (out / "dispersion.csv").write_text(resp["curve_csv"])
    (out / "turing.json").write_text(json_text(resp["report"]))
    _emit(resp["report"])
    return EXIT_OK


def cmd_patch_check(args) -> int:
    cfg = _load_config(args.config, args.seed)
    report = _dispatch(args, "patch-check", cfg)
    (_out_dir(args, cfg) / "patch_report.json").write_text(json_text(report))
    _emit(report)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config, args.seed)
    resp = _dispatch(args, "simulate", cfg)
    out = _out_dir(args, cfg)
    (out / "deviation.csv").write_text(resp["deviation_csv"])
    (out / "final_profile.csv").write_text(resp["final_profile_csv"])
    if resp.get("snapshots_csv"):
        (out / "snapshots.csv").write_text(resp["snapshots_csv"])
    if resp.get("profile_svg"):
        (out / "final_profile.svg").write_text(resp["profile_svg"])
    meta = {k: v for k, v in resp.items()
            if not k.endswith("_csv") and k != "profile_svg"}
    (out / "sim_result.json").write_text(json_text(meta))
    _emit(meta)
    return EXIT_OK


def _parse_range(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"--range expects LO:HI, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"--range expects numbers, got {text!r}") from None
    return lo, hi


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config, args.seed)
    lo, hi = _parse_range(args.range)
    try:
        request = SweepRequest(config=cfg, axis=args.axis, lo=lo, hi=hi, steps=args.steps)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    if args.server:
        resp = _post_remote(args.server, "sweep", request.model_dump(mode="json"))
    else:
        resp = service.run_sweep(request).model_dump(mode="json")
    out = _out_dir(args, cfg)
    (out / "sweep.csv").write_text(resp["csv"])
    meta = {k: v for k, v in resp.items() if k != "csv"}
    (out / "sweep.json").write_text(json_text(meta))
    _emit(meta)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(service.app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turingmarket",
        description="Stability analysis and simulation of capital-labour "
                    "markets with cross-diffusion.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="path to the JSON run configuration")
        sp.add_argument("--out", default=None, help="output directory (default: out)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the simulation seed from the config")
        sp.add_argument("--server", default=None,
                        help="URL of a running service; default runs in-process")

    common(sub.add_parser("analyze", help="equilibria, condition table and eigenvalues"))
    common(sub.add_parser("dispersion", help="dispersion curve and Turing classification"))
    common(sub.add_parser("patch-check", help="two-country stability theorems"))
    common(sub.add_parser("simulate", help="nonlinear PDE simulation"))
    sweep = sub.add_parser("sweep", help="condition margins along a parameter axis")
    common(sweep)
    sweep.add_argument("--axis", required=True, help="dotted parameter path, e.g. diffusion.d12")
    sweep.add_argument("--range", required=True, metavar="LO:HI")
    sweep.add_argument("--steps", required=True, type=int, help="number of intervals")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


_COMMANDS = {
    "analyze": cmd_analyze,
    "dispersion": cmd_dispersion,
    "patch-check": cmd_patch_check,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # internal failure, still a clean exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
