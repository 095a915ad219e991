"""Command-line front end.

Reads a YAML config, posts it to the pricing service, and writes the
returned records as CSV or JSON.  By default the service runs in-process
(no server needed); ``--server URL`` targets a remote instance instead.

Commands: price, converge, quad-compare, grid-stats, reduce, reference.
The config file is the single positional argument; --seed, --threads,
--output, --format override the corresponding config keys.

Exit codes: 0 success, 2 config error, 3 feasibility failure, 4 resource
cap, 5 numerical failure, 1 anything else.

Determinism: with output verbosity 0 the emitted CSV/JSON contains no
wall-clock columns, so identical config + seed produces byte-identical
bytes; verbosity >= 1 (default) appends the timing columns.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

import httpx
import yaml

from .errors import EXIT_CODES, ConfigError
from .schemas import RECORD_MODELS, GridStatsRequest

TIMING_FIELDS = {"wall_seconds", "setup_seconds", "dp_seconds", "step_seconds_mean"}

COMMANDS = ("price", "converge", "quad-compare", "grid-stats", "reduce", "reference")


def _parse_dims(text: str) -> list[int]:
    """'2-5,8' -> [2, 3, 4, 5, 8]"""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo_s, hi_s = part.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ConfigError(f"bad dims range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError("dims list is empty")
    return out


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping at top level")
    return data


def apply_overrides(config: dict, args: argparse.Namespace) -> dict:
    method = config.setdefault("method", {})
    if args.seed is not None:
        quad = method.get("quadrature")
        if isinstance(quad, list):
            for q in quad:
                q["seed"] = args.seed
        elif isinstance(quad, dict):
            quad["seed"] = args.seed
        else:
            method["quadrature"] = {"kind": "gk_sparse", "level": 4, "seed": args.seed}
    if args.threads is not None:
        method["threads"] = args.threads
    output = config.setdefault("output", {})
    if args.output is not None:
        output["path"] = args.output
    if args.format is not None:
        output["format"] = args.format
    return config


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_records(records: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "csv":
        lines = [",".join(columns)]
        for rec in records:
            lines.append(",".join(format_cell(rec.get(c)) for c in columns))
        return "\n".join(lines) + "\n"
    # json: one object per record, schema key order
    lines = [
        json.dumps({c: rec.get(c) for c in columns}, separators=(", ", ": "))
        for rec in records
    ]
    return "\n".join(lines) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # in-process: drive the ASGI app through a sync portal client
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import app  # deferred: keeps --help fast

    return TestClient(app, raise_server_exceptions=False)


def _error_exit(response: httpx.Response) -> int:
    try:
        envelope = response.json()
        body = envelope["error"]
        kind = body.get("kind", "internal")
        message = body.get("message", "")
    except Exception:
        kind, message = "internal", response.text[:500]
    print(f"error ({kind}): {message}", file=sys.stderr)
    return EXIT_CODES.get(kind, 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgbasket",
        description="Sparse-grid Bermudan basket put pricer",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", nargs="?", help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="override quadrature seed")
    parser.add_argument("--threads", type=int, default=None, help="override thread count")
    parser.add_argument("--output", default=None, help="write records to this path")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    parser.add_argument("--dims", default=None, help="grid-stats dims, e.g. '2-10' or '2,3,5'")
    parser.add_argument(
        "--interp-level", type=int, default=None, help="grid-stats interpolation level"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    except httpx.HTTPError as exc:
        print(f"error (transport): {exc}", file=sys.stderr)
        return 1


def _run(args: argparse.Namespace) -> int:
    command = args.command

    if command == "grid-stats":
        payload, verbosity = _grid_stats_payload(args)
        endpoint = "/grid-stats"
        out_path, out_fmt = args.output, args.format or "csv"
    else:
        if not args.config:
            raise ConfigError(f"{command} requires a config file argument")
        config = apply_overrides(load_config_file(args.config), args)
        payload = config
        out_block = config.get("output", {}) or {}
        out_path = out_block.get("path")
        out_fmt = out_block.get("format", "csv")
        verbosity = out_block.get("verbosity", 1)
        endpoint = "/" + command

    with _client(args.server) as client:
        response = client.post(endpoint, json=payload)
    if response.status_code != 200:
        return _error_exit(response)

    data = response.json()
    rows = data if isinstance(data, list) else [data]
    model = RECORD_MODELS[command]
    records = [model(**row).model_dump() for row in rows]

    columns = [
        name
        for name in model.model_fields
        if verbosity >= 1 or name not in TIMING_FIELDS
    ]
    _emit(render_records(records, columns, out_fmt), out_path)

    if verbosity >= 1:
        _human_summary(command, records, out_path)
    return 0


def _grid_stats_payload(args: argparse.Namespace) -> tuple[dict, int]:
    verbosity = 1
    interp_level = 5
    dims: list[int] | None = None
    point_cap = 5_000_000
    if args.config:
        config = load_config_file(args.config)
        method = config.get("method", {}) or {}
        lvl = method.get("interp_level", 5)
        interp_level = lvl[0] if isinstance(lvl, list) else lvl
        point_cap = method.get("point_cap", point_cap)
        market = config.get("market", {}) or {}
        if isinstance(market.get("spot"), list):
            dims = [len(market["spot"])]
        verbosity = (config.get("output", {}) or {}).get("verbosity", 1)
    if args.dims is not None:
        dims = _parse_dims(args.dims)
    if args.interp_level is not None:
        interp_level = args.interp_level
    if dims is None:
        raise ConfigError("grid-stats needs --dims or a config file with a market block")
    req = GridStatsRequest(dims=dims, interp_level=interp_level, point_cap=point_cap)
    return req.model_dump(), verbosity


def _human_summary(command: str, records: list[dict], out_path: str | None) -> None:
    if command == "price" and records:
        rec = records[0]
        rel = rec.get("rel_err")
        rel_text = f"  rel_err={rel:.3e}" if rel is not None else ""
        print(f"price={rec['price']:.6f}{rel_text}", file=sys.stderr)
    elif command == "reference" and records:
        rec = records[0]
        print(
            f"reference={rec['price']:.8f}  delta={rec['delta']:.2e}  "
            f"converged={rec['converged']}",
            file=sys.stderr,
        )
    if out_path:
        print(f"wrote {len(records)} record(s) to {out_path}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
