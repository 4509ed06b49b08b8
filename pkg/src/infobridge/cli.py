"""Command-line front end.

A thin client over the pricing service: scenario files are read locally,
shipped to the service as request payloads, and the returned CSV documents
are written to the output directory.  By default requests run against the
service in-process (ASGI transport, no socket); ``--server URL`` targets a
remote instance and ``serve`` starts one.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import httpx

_ENV_THREADS = "INFOBRIDGE_THREADS"


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=3600.0)
    # in-process: drive the ASGI app directly through a blocking portal
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # StarletteDeprecationWarning is a UserWarning
        from starlette.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _overrides(args) -> dict:
    threads = args.threads
    if threads is None and os.environ.get(_ENV_THREADS):
        threads = int(os.environ[_ENV_THREADS])
    return {
        "nodes": args.nodes,
        "grid_steps": args.grid,
        "eps": args.eps,
        "threads": threads,
    }


def _read_scenario(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _write_outputs(outputs: dict[str, str], out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in outputs.items():
        target = os.path.join(out_dir, name)
        with open(target, "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {target}")


def _post(args, endpoint: str, payload: dict) -> dict:
    with _client(args.server) as client:
        response = client.post(endpoint, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(2)
    return response.json()


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="scenario YAML file")
    parser.add_argument("--out", default="out", help="output directory for CSVs")
    parser.add_argument("--server", default=None, help="remote service URL (default: in-process)")
    parser.add_argument("--nodes", type=int, default=None, help="quadrature nodes")
    parser.add_argument("--grid", type=int, default=None, help="time-grid steps")
    parser.add_argument("--eps", type=float, default=None, help="maturity guard fraction")
    parser.add_argument(
        "--threads", type=int, default=None,
        help=f"worker threads (default: ${_ENV_THREADS} or 1)",
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="infobridge", description="Information-driven asset pricing"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_price = sub.add_parser("price", help="price assets at a point or along a path")
    _add_common(p_price)
    p_price.add_argument("--at", type=float, default=None, help="valuation time")
    p_price.add_argument("--xi", default=None, help="information level(s): number or id=value,...")
    p_price.add_argument("--path", default=None, help="CSV path file of (t, xi_<factor>) rows")

    p_sim = sub.add_parser("simulate", help="simulate an ensemble of price paths")
    _add_common(p_sim)
    p_sim.add_argument("--paths", type=int, default=None, help="number of paths")
    p_sim.add_argument("--seed", type=int, default=None, help="RNG seed (overrides scenario)")

    p_opt = sub.add_parser("option", help="value a European call")
    _add_common(p_opt)
    p_opt.add_argument("--strike", type=float, required=True)
    p_opt.add_argument("--expiry", type=float, required=True)
    p_opt.add_argument("--mc", type=int, default=None, help="Monte Carlo cross-check paths")
    p_opt.add_argument("--asset", default=None, help="asset id (default: first)")

    p_ver = sub.add_parser("verify", help="run statistical/identity verification suites")
    _add_common(p_ver)
    p_ver.add_argument(
        "--suite", action="append", default=None,
        help="suite name (repeatable); default: all of bridge, filter, consistency, "
        "innovation, inverse",
    )

    p_serve = sub.add_parser("serve", help="run the pricing service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    scenario_text = _read_scenario(args.scenario)
    payload: dict = {"scenario": scenario_text, "overrides": _overrides(args)}

    if args.command == "price":
        if args.path is not None:
            with open(args.path) as fh:
                payload["path_csv"] = fh.read()
        payload["at"] = args.at
        payload["xi"] = args.xi
        body = _post(args, "/price", payload)
    elif args.command == "simulate":
        payload["paths"] = args.paths
        payload["seed"] = args.seed
        body = _post(args, "/simulate", payload)
    elif args.command == "option":
        payload["strike"] = args.strike
        payload["expiry"] = args.expiry
        payload["mc_paths"] = args.mc
        payload["asset_id"] = args.asset
        body = _post(args, "/option", payload)
    elif args.command == "verify":
        payload["suites"] = args.suite
        body = _post(args, "/verify", payload)
    else:  # pragma: no cover
        parser.error(f"unknown command {args.command}")

    _write_outputs(body["outputs"], args.out)
    print(json.dumps(body["summary"], indent=2, default=str))
    if args.command == "verify":
        passed = bool(body.get("passed"))
        print("VERIFY:", "PASS" if passed else "FAIL")
        return 0 if passed else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
