"""Command line interface.

    heavytail-lab run <config.json>    run a registered experiment
    heavytail-lab list                 list registered experiments
    heavytail-lab verify <manifest>    re-run a manifest and compare digests

Config schema: {"experiment": name, "seed": int, "params": {...},
"output_dir": path}. HEAVYTAIL_LAB_OUTPUT overrides the output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import registered_names, run_experiment, verify_manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="heavytail-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--output-dir", type=Path, default=None)

    sub.add_parser("list", help="list registered experiments")

    p_verify = sub.add_parser("verify", help="re-run a manifest and compare digests")
    p_verify.add_argument("manifest", type=Path)

    args = parser.parse_args(argv)

    if args.command == "list":
        for name in registered_names():
            print(name)
        return 0

    if args.command == "run":
        config = json.loads(args.config.read_text())
        out = (
            args.output_dir
            or os.environ.get("HEAVYTAIL_LAB_OUTPUT")
            or config.get("output_dir", ".")
        )
        try:
            manifest = run_experiment(config, output_dir=out)
        except ValueError as exc:
            print(str(exc), file=sys.stderr)
            return 2
        print(json.dumps(manifest, sort_keys=True, indent=2))
        return 0

    if args.command == "verify":
        report = verify_manifest(args.manifest)
        print(json.dumps(report, sort_keys=True, indent=2))
        return 0 if report["reproduced"] else 1

    return 2


if __name__ == "__main__":
    sys.exit(main())
