"""Run a configured task and write its result files."""
from __future__ import annotations

import json
import logging
import math
import os
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from qdcavity import __version__
from qdcavity.errors import (
    AliasingError,
    CalibrationError,
    ConfigError,
    CrossingAmbiguityError,
    CrossingNotFoundError,
    DataError,
    FitError,
    IntegrationError,
    InvalidParameterError,
    InvalidProblemError,
    SchemaError,
)
from qdcavity.io.csvio import write_spectrum_csv, write_table
from qdcavity.io.tasks import TASK_FUNCTIONS

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_EXIT_CODES = (
    ((ConfigError, InvalidParameterError), EXIT_CONFIG),
    ((SchemaError, DataError, CrossingNotFoundError, CrossingAmbiguityError), EXIT_DATA),
    ((FitError, IntegrationError, CalibrationError, AliasingError, InvalidProblemError,
      np.linalg.LinAlgError, FloatingPointError), EXIT_NUMERICAL),
)
RESULT_FILE = "result.json"
LOG_FILE = "run.log"


@dataclass
class ResultEnvelope:
    artifact_version: str
    task: str
    config_echo: dict
    provenance: dict
    results: dict
    warnings: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def to_dict(self):
        return {"artifact_version": self.artifact_version, "task": self.task,
                "config_echo": self.config_echo, "provenance": self.provenance,
                "results": self.results, "warnings": self.warnings, "files": self.files}


def exit_code_for(exc):
    for classes, code in _EXIT_CODES:
        if isinstance(exc, classes):
            return code
    return EXIT_INTERNAL


def error_object(exc, task=None, config_path=None):
    """Machine-readable description of a failure."""
    context = {}
    if task is not None:
        context["task"] = task
    if config_path is not None:
        context["config"] = str(config_path)
    if isinstance(exc, FitError) and exc.last_iterate is not None:
        context["last_iterate"] = jsonable(exc.last_iterate)
    if isinstance(exc, IntegrationError):
        context["time_ps"] = exc.time
    if isinstance(exc, CrossingAmbiguityError):
        context["candidates_meV"] = [c / 1000.0 for c in exc.candidates]
    return {"error": {"type": type(exc).__name__, "exit_code": exit_code_for(exc),
                      "message": str(exc), "context": context}}


def jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj):
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


def _unique(messages):
    seen, out = set(), []
    for m in messages:
        if m not in seen:
            seen.add(m)
            out.append(m)
    return out


def run(config, write=True):
    """Execute ``config.task``; write results unless ``write`` is False.

    Result files hold no timestamps, so the same config and seed give
    byte-identical files.  Timing goes to the sidecar ``run.log``.

    Returns
    -------
    ResultEnvelope
    """
    out_dir = config.output["directory"]
    formats = config.output["formats"]
    logger = logging.getLogger("qdcavity.run")
    handler = None
    if write:
        os.makedirs(out_dir, exist_ok=True)
        handler = logging.FileHandler(os.path.join(out_dir, LOG_FILE), mode="w", encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
        logger.addHandler(handler)
        logger.setLevel(logging.INFO)
        logger.propagate = False
    try:
        start = time.perf_counter()
        logger.info("task %s started, seed %d", config.task, config.seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            output = TASK_FUNCTIONS[config.task](config)
        messages = _unique(list(output.warnings) + [str(w.message) for w in caught])
        for m in messages:
            logger.warning(m)

        files = []
        if "csv" in formats:
            for name, spectrum in output.spectra.items():
                files.append(f"{name}.csv")
            for name in output.tables:
                files.append(f"{name}.csv")
        if "json" in formats:
            files.append(RESULT_FILE)
        envelope = ResultEnvelope(__version__, config.task, config.to_dict(), dict(config.provenance),
                                  jsonable(output.results), messages, files)
        if write:
            if "csv" in formats:
                for name, spectrum in output.spectra.items():
                    write_spectrum_csv(os.path.join(out_dir, f"{name}.csv"), spectrum)
                for name, (columns, rows) in output.tables.items():
                    write_table(os.path.join(out_dir, f"{name}.csv"), columns, rows)
            if "json" in formats:
                with open(os.path.join(out_dir, RESULT_FILE), "w", encoding="utf-8") as fh:
                    fh.write(dumps(envelope.to_dict()))
            logger.info("wrote %s", ", ".join(files))
        logger.info("task %s finished in %.3f s", config.task, time.perf_counter() - start)
        return envelope
    except Exception as exc:
        logger.error("task %s failed: %s: %s", config.task, type(exc).__name__, exc)
        raise
    finally:
        if handler is not None:
            logger.removeHandler(handler)
            handler.close()
