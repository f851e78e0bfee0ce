"""Command-line harness: a thin client over the HTTP service.

Every workflow command builds a request from its --config file and posts it
to the service API. By default the service runs in-process (no socket, no
server to manage); --server points the same client at a remote instance
instead. `krf serve` starts a standalone server.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .errors import EXIT_CODES, ConfigError
from .pipeline import load_config_file

USAGE_EXIT = 2
INTERNAL_EXIT = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krf", description="6D object-pose refinement toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, jobs=True):
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--seed", type=int, default=0, help="base RNG seed (u64)")
        if jobs:
            p.add_argument("--jobs", type=int, default=1,
                           help="frames refined concurrently")
        p.add_argument("--output", required=True, help="directory for reports")
        p.add_argument("--server", default=None,
                       help="URL of a running krf service (default: in-process)")

    add_common(sub.add_parser("refine", help="refine poses over a dataset or synthetic spec"))
    add_common(sub.add_parser("ablate", help="run a variant matrix and tabulate it"))
    add_common(sub.add_parser("synth", help="generate a synthetic dataset"), jobs=False)

    ev = sub.add_parser("evaluate", help="aggregate metrics over refine reports")
    ev.add_argument("reports", nargs="+", help="refine report JSON paths")
    ev.add_argument("--output", required=True, help="directory for reports")
    ev.add_argument("--server", default=None,
                    help="URL of a running krf service (default: in-process)")

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8417)
    return parser


async def _post_async(server, path, payload):
    if server is None:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://krf.internal",
                                     timeout=None) as client:
            return await client.post(path, json=payload)
    async with httpx.AsyncClient(base_url=server, timeout=None) as client:
        return await client.post(path, json=payload)


def _post(server, path, payload) -> dict:
    """POST and return the report dict, or exit with the mapped code."""
    try:
        response = asyncio.run(_post_async(server, path, payload))
    except httpx.HTTPError as exc:
        print(f"krf: cannot reach server: {exc}", file=sys.stderr)
        raise SystemExit(INTERNAL_EXIT)
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
    except json.JSONDecodeError:
        body = {}
    err = body.get("error")
    if isinstance(err, dict) and err.get("kind") in EXIT_CODES:
        print(f"krf: {err.get('message', 'unknown error')}", file=sys.stderr)
        raise SystemExit(EXIT_CODES[err["kind"]])
    print(f"krf: server error {response.status_code}: {response.text[:500]}", file=sys.stderr)
    raise SystemExit(INTERNAL_EXIT)


def _check_seed(seed: int):
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"--seed must fit in an unsigned 64-bit integer, got {seed}")


def cmd_refine(args) -> int:
    _check_seed(args.seed)
    payload = {"config": load_config_file(args.config), "seed": args.seed,
               "jobs": args.jobs, "output": args.output}
    report = _post(args.server, "/v1/refine", payload)
    agg = report["aggregate"]
    print(f"refined {agg['frames']} frame(s) of {report['object']!r} "
          f"({report['config']['registration']} registration, "
          f"color {'on' if report['config']['use_color'] else 'off'})")
    print(f"  ADD(S)-0.1: {agg['add01_init']:.3f} -> {agg['add01_refined']:.3f}")
    print(f"  AUC (0.1 m): {agg['auc_init']:.4f} -> {agg['auc_refined']:.4f}")
    print(f"  mean iterations: {agg['mean_iterations']:.2f}; "
          f"converged {agg['converged']}/{agg['frames']}")
    print(f"report written to {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    payload = {"reports": args.reports, "output": args.output}
    report = _post(args.server, "/v1/evaluate", payload)
    agg = report["aggregate"]
    print(f"evaluated {agg['frames']} frame(s) over {len(report['fragments'])} report(s)")
    print(f"  ADD(S)-0.1: {agg['add01_init']:.3f} -> {agg['add01_refined']:.3f}")
    print(f"  AUC (0.1 m): {agg['auc_init']:.4f} -> {agg['auc_refined']:.4f}")
    print(f"report written to {args.output}")
    return 0


def cmd_synth(args) -> int:
    _check_seed(args.seed)
    payload = {"config": load_config_file(args.config), "seed": args.seed,
               "output": args.output}
    report = _post(args.server, "/v1/synth", payload)
    print(f"wrote {report['count']} scene(s) ({report['model_points']} model points, "
          f"diameter {report['diameter']:.4f} m) to {report['dataset']}")
    return 0


def cmd_ablate(args) -> int:
    _check_seed(args.seed)
    payload = {"config": load_config_file(args.config), "seed": args.seed,
               "jobs": args.jobs, "output": args.output}
    report = _post(args.server, "/v1/ablate", payload)
    header = f"{'color':<6} {'registration':<13} {'completion':<11} " \
             f"{'ADD(S)-0.1':>10} {'AUC':>8} {'iters':>6}"
    print(header)
    for v in report["variants"]:
        print(f"{'on' if v['color'] else 'off':<6} {v['registration']:<13} "
              f"{v['completion']:<11} {v['add01_refined']:>10.3f} "
              f"{v['auc_refined']:>8.4f} {v['mean_iterations']:>6.2f}")
    print(f"report written to {args.output}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "refine": cmd_refine,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
    "ablate": cmd_ablate,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"krf: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]


if __name__ == "__main__":
    sys.exit(main())
