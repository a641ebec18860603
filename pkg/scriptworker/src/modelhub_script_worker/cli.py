"""modelhub-script-worker: attach a script kernel to a backend."""

from __future__ import annotations

import argparse
import logging
import sys

from .worker import HEARTBEAT_INTERVAL, KERNEL_TAG, POLL_TIMEOUT, serve
from .runner import DEFAULT_TIMEOUT


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="modelhub-script-worker")
    parser.add_argument("--url", required=True, help="backend base url")
    parser.add_argument("--token", required=True, help="worker-class API token")
    parser.add_argument("--kernel-tag", default=KERNEL_TAG)
    parser.add_argument("--job-timeout", type=float, default=DEFAULT_TIMEOUT)
    parser.add_argument("--poll-timeout", type=float, default=POLL_TIMEOUT)
    parser.add_argument("--heartbeat-interval", type=float, default=HEARTBEAT_INTERVAL)
    parser.add_argument("--max-jobs", type=int, default=None, help="exit after N jobs")
    parser.add_argument("--log-level", default="info")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    serve(
        args.url,
        args.token,
        kernel_tag=args.kernel_tag,
        job_timeout=args.job_timeout,
        poll_timeout=args.poll_timeout,
        heartbeat_interval=args.heartbeat_interval,
        max_jobs=args.max_jobs,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
