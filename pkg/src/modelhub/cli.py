"""modelhub command line: parse files, serve the API, mint tokens."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .annotations import ParserConfig, UnknownExtensionError, detect_comment_tag, parse
from .core import component_listing, validate


def cmd_parse(args) -> int:
    try:
        with open(args.file, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        tag = args.tag or detect_comment_tag(args.file)
    except UnknownExtensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    source = data.decode("utf-8")
    manifest, diags = parse(source, ParserConfig(comment_tag=tag))
    diags = diags + validate(manifest)

    if args.format == "json":
        print(
            json.dumps(
                {"manifest": manifest.to_dict(), "diagnostics": [d.to_dict() for d in diags]},
                indent=2,
            )
        )
    else:
        if manifest.name:
            print(f"Model: {manifest.name}")
        for kind, name, description, order in component_listing(manifest):
            desc = f"  {description}" if description else ""
            print(f"{order:3d}  {kind.value:<16} {name}{desc}")
        for d in diags:
            line = f" (line {d.line})" if d.line else ""
            print(f"{d.severity}: {d.message}{line}", file=sys.stderr)
    return 1 if any(d.severity == "error" for d in diags) else 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import ModelHubService, Storage, create_app

    port = int(os.environ.get("MODELHUB_PORT", args.port))
    data_dir = os.environ.get("MODELHUB_DATA_DIR", args.data_dir)
    service = ModelHubService(Storage(data_dir))
    app = create_app(service, embedded_worker=args.embedded_worker == "on")
    print(f"modelhub: serving on {args.host}:{port}, data in {data_dir}")
    uvicorn.run(app, host=args.host, port=port, log_level=args.log_level)
    return 0


def cmd_token_create(args) -> int:
    from .server import ModelHubService, Storage

    service = ModelHubService(Storage(args.data_dir))
    kind = "worker" if args.worker else "user"
    token = service.create_token(args.user, kind=kind)
    print(token)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modelhub")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse an annotated model file")
    p.add_argument("file")
    p.add_argument("--tag", help="comment tag (detected from the extension when omitted)")
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.set_defaults(func=cmd_parse)

    s = sub.add_parser("serve", help="run the API server")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8080)
    s.add_argument("--data-dir", default="./modelhub-data")
    s.add_argument("--embedded-worker", choices=("on", "off"), default="on")
    s.add_argument("--log-level", default="info")
    s.set_defaults(func=cmd_serve)

    t = sub.add_parser("token", help="token management")
    tsub = t.add_subparsers(dest="token_command", required=True)
    tc = tsub.add_parser("create", help="mint a token and print it once")
    tc.add_argument("user")
    tc.add_argument("--worker", action="store_true", help="mint a worker-class token")
    tc.add_argument("--data-dir", default="./modelhub-data")
    tc.set_defaults(func=cmd_token_create)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
