"""Command line: ``qdcavity <task> --config cfg.json [--out DIR] [--seed N] [--format json,csv]``."""
from __future__ import annotations

import argparse
import json
import sys

from qdcavity.errors import ConfigError
from qdcavity.io.config import FORMATS, TASKS, RunConfig, parse_json
from qdcavity.io.run import EXIT_OK, dumps, error_object, exit_code_for, run


def _formats(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in FORMATS]
    if not items or bad:
        raise argparse.ArgumentTypeError(f"formats must be a comma list from {list(FORMATS)}")
    return items


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qdcavity",
        description="Cavity-dressed quantum-dot spin simulations and reflectivity fits.")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", help="JSON run configuration; omitted keys take defaults")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument("--seed", type=int, help="random seed (overrides seed)")
    parser.add_argument("--format", type=_formats, help="comma list of json,csv (overrides output.formats)")
    return parser


def load_config(task, path):
    """Read ``path`` (or start empty) and check that its task matches."""
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = parse_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object")
    if "task" in raw and raw["task"] != task:
        raise ConfigError(f"config.task is {raw['task']!r} but the command asks for {task!r}")
    from_file = "task" in raw
    cfg = RunConfig.from_dict(dict(raw, task=task))
    cfg.provenance["config.task"] = "config" if from_file else "cli"
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = load_config(args.task, args.config)
        cfg = cfg.with_overrides(seed=args.seed, directory=args.out, formats=args.format)
        envelope = run(cfg)
    except Exception as exc:
        sys.stderr.write(dumps(error_object(exc, args.task, args.config)))
        return exit_code_for(exc)
    summary = {"task": envelope.task, "directory": cfg.output["directory"], "files": envelope.files,
               "warnings": len(envelope.warnings)}
    sys.stdout.write(json.dumps(summary) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
