"""Thin CLI client for the pipeline service.

Every subcommand marshals its flags into a request and POSTs it to the
service. With no --server the app runs in-process over an ASGI transport,
so paths behave exactly like a local tool; with --server URL the same
payloads go to a remote instance.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 convergence
error. A config file (flat "key = value" lines) supplies defaults; explicit
flags override it.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .errors import ConfigError

SUPPRESS = argparse.SUPPRESS

ENDPOINT_FIELDS = {
    "synth": ("out_dir", "n_files", "vowels_per_file", "seed"),
    "prepare": ("corpus_dir", "out_dir", "min_duration", "max_duration", "pad_to", "partition"),
    "features": ("manifest", "out_dir", "weights", "random_weights_seed", "pooling"),
    "train": ("features_dir", "out_dir", "sets", "folds", "seed", "test_fraction", "c_values", "tol", "max_passes"),
    "mi": ("features_dir", "out_dir", "k", "pairs", "max_samples", "seed", "reduction", "target"),
    "report": ("run_dir", "out_dir"),
    "run": (
        "corpus_dir", "out_dir", "weights", "random_weights_seed", "pooling", "partition",
        "test_fraction", "seed", "folds", "sets", "mi_k", "mi_pairs", "mi_max_samples",
        "mi_target", "c_values", "tol", "max_passes", "min_duration", "max_duration", "pad_to",
    ),
}

REQUIRED_FIELDS = {
    "synth": ("out_dir",),
    "prepare": ("corpus_dir", "out_dir"),
    "features": ("manifest", "out_dir"),
    "train": ("features_dir", "out_dir"),
    "mi": ("features_dir", "out_dir"),
    "report": ("run_dir", "out_dir"),
    "run": ("corpus_dir", "out_dir"),
}


def parse_config_file(path: str) -> dict:
    """Flat key-value text: 'key = value' per line, '#' comments."""
    values: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = parts
        values[key.strip().replace("-", "_")] = _coerce(value.strip())
    return values


def _coerce(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file; flags override it")
    sub.add_argument("--server", help="remote service URL (default: run the service in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vowelprobe", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="write a formant-synthesized front/back corpus")
    p.add_argument("--out", dest="out_dir", default=SUPPRESS)
    p.add_argument("--files", dest="n_files", type=int, default=SUPPRESS)
    p.add_argument("--vowels-per-file", dest="vowels_per_file", type=int, default=SUPPRESS)
    p.add_argument("--seed", dest="seed", type=int, default=SUPPRESS)
    _add_common(p)

    p = subs.add_parser("prepare", help="scan a corpus and emit the segment manifest")
    p.add_argument("--corpus", dest="corpus_dir", default=SUPPRESS)
    p.add_argument("--out", dest="out_dir", default=SUPPRESS)
    p.add_argument("--min", dest="min_duration", type=int, default=SUPPRESS)
    p.add_argument("--max", dest="max_duration", type=int, default=SUPPRESS)
    p.add_argument("--pad", dest="pad_to", type=int, default=SUPPRESS)
    p.add_argument("--partition", dest="partition", choices=("train", "test"), default=SUPPRESS)
    _add_common(p)

    p = subs.add_parser("features", help="extract all nine feature sets from a manifest")
    p.add_argument("--manifest", dest="manifest", default=SUPPRESS)
    p.add_argument("--weights", dest="weights", default=SUPPRESS)
    p.add_argument("--random-weights", dest="random_weights_seed", type=int, default=SUPPRESS,
                   help="seeded random conv weights instead of a container")
    p.add_argument("--pooling", dest="pooling", choices=("mean", "flatten"), default=SUPPRESS)
    p.add_argument("--out", dest="out_dir", default=SUPPRESS)
    _add_common(p)

    p = subs.add_parser("train", help="grid-search SVMs on extracted features")
    p.add_argument("--features", dest="features_dir", default=SUPPRESS)
    p.add_argument("--set", dest="sets", default=SUPPRESS,
                   help="mfcc|mfcc_f1f2|layer0..layer6|all")
    p.add_argument("--folds", dest="folds", type=int, default=SUPPRESS)
    p.add_argument("--seed", dest="seed", type=int, default=SUPPRESS)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=SUPPRESS)
    p.add_argument("--c-values", dest="c_values", default=SUPPRESS,
                   help="comma-separated C grid override")
    p.add_argument("--tol", dest="tol", type=float, default=SUPPRESS)
    p.add_argument("--max-passes", dest="max_passes", type=int, default=SUPPRESS)
    p.add_argument("--out", dest="out_dir", default=SUPPRESS)
    _add_common(p)

    p = subs.add_parser("mi", help="k-NN mutual information between MFCCs and layer activations")
    p.add_argument("--features", dest="features_dir", default=SUPPRESS)
    p.add_argument("--k", dest="k", type=int, default=SUPPRESS)
    p.add_argument("--pairs", dest="pairs", type=int, default=SUPPRESS)
    p.add_argument("--max-samples", dest="max_samples", type=int, default=SUPPRESS)
    p.add_argument("--seed", dest="seed", type=int, default=SUPPRESS)
    p.add_argument("--reduction", dest="reduction", choices=("mean_pairs", "max_pairs"), default=SUPPRESS)
    p.add_argument("--target", dest="target", choices=("mfcc", "label"), default=SUPPRESS)
    p.add_argument("--out", dest="out_dir", default=SUPPRESS)
    _add_common(p)

    p = subs.add_parser("report", help="collect train/mi outputs into summary, CSVs and SVGs")
    p.add_argument("--run", dest="run_dir", default=SUPPRESS)
    p.add_argument("--out", dest="out_dir", default=SUPPRESS)
    _add_common(p)

    p = subs.add_parser("run", help="full pipeline: prepare, features, train, mi, report")
    p.add_argument("--corpus", dest="corpus_dir", default=SUPPRESS)
    p.add_argument("--out", dest="out_dir", default=SUPPRESS)
    p.add_argument("--weights", dest="weights", default=SUPPRESS)
    p.add_argument("--random-weights", dest="random_weights_seed", type=int, default=SUPPRESS)
    p.add_argument("--pooling", dest="pooling", choices=("mean", "flatten"), default=SUPPRESS)
    p.add_argument("--partition", dest="partition", choices=("train", "test"), default=SUPPRESS)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=SUPPRESS)
    p.add_argument("--seed", dest="seed", type=int, default=SUPPRESS)
    p.add_argument("--folds", dest="folds", type=int, default=SUPPRESS)
    p.add_argument("--set", dest="sets", default=SUPPRESS)
    p.add_argument("--mi-k", dest="mi_k", type=int, default=SUPPRESS)
    p.add_argument("--mi-pairs", dest="mi_pairs", type=int, default=SUPPRESS)
    p.add_argument("--mi-max-samples", dest="mi_max_samples", type=int, default=SUPPRESS)
    p.add_argument("--mi-target", dest="mi_target", choices=("mfcc", "label"), default=SUPPRESS)
    p.add_argument("--c-values", dest="c_values", default=SUPPRESS)
    p.add_argument("--tol", dest="tol", type=float, default=SUPPRESS)
    p.add_argument("--max-passes", dest="max_passes", type=int, default=SUPPRESS)
    p.add_argument("--min", dest="min_duration", type=int, default=SUPPRESS)
    p.add_argument("--max", dest="max_duration", type=int, default=SUPPRESS)
    p.add_argument("--pad", dest="pad_to", type=int, default=SUPPRESS)
    _add_common(p)

    p = subs.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8337)

    return parser


def build_payload(command: str, args: argparse.Namespace) -> dict:
    file_values = parse_config_file(args.config) if getattr(args, "config", None) else {}
    payload = {}
    for key in ENDPOINT_FIELDS[command]:
        if key in file_values:
            payload[key] = file_values[key]
        if hasattr(args, key):
            payload[key] = getattr(args, key)
    if isinstance(payload.get("c_values"), str):
        try:
            payload["c_values"] = [float(v) for v in payload["c_values"].split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --c-values list: {exc}") from exc
    missing = [key for key in REQUIRED_FIELDS[command] if key not in payload]
    if missing:
        raise ConfigError(f"missing required option(s) for {command}: {', '.join(missing)}")
    return payload


async def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            return await client.post(path, json=payload)
    from .service import app  # deferred so plain CLI help stays fast

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, base_url="http://vowelprobe.local", timeout=None) as client:
        return await client.post(path, json=payload)


def call_endpoint(command: str, args: argparse.Namespace) -> int:
    payload = build_payload(command, args)
    response = asyncio.run(_post(getattr(args, "server", None), f"/{command}", payload))
    if response.status_code == 200:
        body = response.json()
        print(json.dumps(body, indent=2, sort_keys=True))
        return 0
    try:
        error = response.json()["error"]
    except Exception:
        print(f"error: HTTP {response.status_code}: {response.text}", file=sys.stderr)
        return 1
    print(f"{error['kind']} error: {error['message']}", file=sys.stderr)
    return {"config": 2, "data": 3, "convergence": 4}.get(error["kind"], 1)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        return call_endpoint(args.command, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"data error: cannot reach service: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
