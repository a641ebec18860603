"""modelhub-client: thin command line over the client library."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .client import ClientError, Interface


def _interface(args) -> Interface:
    url = args.url or os.environ.get("MODELHUB_URL")
    token = args.token or os.environ.get("MODELHUB_TOKEN")
    if not url or not token:
        raise SystemExit("supply --url/--token or set MODELHUB_URL/MODELHUB_TOKEN")
    return Interface(url, token)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def cmd_upload(args) -> int:
    handle = _interface(args).new_model(
        args.file, args.name, args.kernel, comment_tag=args.comment_tag
    )
    print(f"uploaded {args.name} as {handle.id}")
    return 0


def cmd_set(args) -> int:
    handle = _interface(args).get_model_with_name(args.model)
    if args.object:
        name, _, raw = args.object.partition("=")
        if not raw:
            raise SystemExit("--object expects NAME=VALUE")
        handle.set_interface_object(name, _parse_value(raw))
        print(f"set {name}")
    if args.file:
        name, _, path = args.file.partition("=")
        if not path:
            raise SystemExit("--file expects NAME=PATH")
        handle.set_interface_file(name, path)
        print(f"uploaded {name}")
    if not args.object and not args.file:
        raise SystemExit("nothing to set; pass --object and/or --file")
    return 0


def cmd_run(args) -> int:
    handle = _interface(args).get_model_with_name(args.model)
    execution = handle.run(wait=not args.no_wait)
    print(json.dumps(execution, indent=2))
    return 0 if execution["status"] in ("queued", "success") else 1


def cmd_status(args) -> int:
    print(_interface(args).get_model_with_name(args.model).get_status())
    return 0


def cmd_log(args) -> int:
    interface = _interface(args)
    if args.execution:
        doc = interface.request("GET", f"/api/executions/{args.execution}/log/")
        print(doc["log"])
    else:
        print(interface.get_model_with_name(args.model).get_execution_log())
    return 0


def cmd_results(args) -> int:
    interface = _interface(args)
    if args.execution:
        doc = interface.request("GET", f"/api/executions/{args.execution}/results/")
    else:
        doc = interface.get_model_with_name(args.model).get_results()
    print(json.dumps(doc, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modelhub-client")
    parser.add_argument("--url", help="server base url (or MODELHUB_URL)")
    parser.add_argument("--token", help="API token (or MODELHUB_TOKEN)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("upload", help="upload an annotated model file")
    p.add_argument("--file", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--comment-tag")
    p.set_defaults(func=cmd_upload)

    p = sub.add_parser("set", help="set interface values on a model")
    p.add_argument("--model", required=True)
    p.add_argument("--object", help="NAME=VALUE (VALUE parsed as JSON when possible)")
    p.add_argument("--file", help="NAME=PATH")
    p.set_defaults(func=cmd_set)

    p = sub.add_parser("run", help="run a model")
    p.add_argument("--model", required=True)
    p.add_argument("--no-wait", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("status", help="latest execution status")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_status)

    p = sub.add_parser("log", help="execution log")
    p.add_argument("--model")
    p.add_argument("--execution")
    p.set_defaults(func=cmd_log)

    p = sub.add_parser("results", help="execution results")
    p.add_argument("--model")
    p.add_argument("--execution")
    p.set_defaults(func=cmd_results)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
