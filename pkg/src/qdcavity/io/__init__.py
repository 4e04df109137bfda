"""Configuration, spectrum files, task dispatch and the command line."""
from qdcavity.io.config import FORMATS, MEV, TASKS, RunConfig, grid_values, parse_json
from qdcavity.io.csvio import format_number, load_spectrum_csv, write_spectrum_csv, write_table
from qdcavity.io.run import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_INTERNAL,
    EXIT_NUMERICAL,
    EXIT_OK,
    ResultEnvelope,
    error_object,
    exit_code_for,
    run,
)

__all__ = [
    "FORMATS", "MEV", "TASKS", "RunConfig", "grid_values", "parse_json",
    "format_number", "load_spectrum_csv", "write_spectrum_csv", "write_table",
    "EXIT_CONFIG", "EXIT_DATA", "EXIT_INTERNAL", "EXIT_NUMERICAL", "EXIT_OK",
    "ResultEnvelope", "error_object", "exit_code_for", "run",
]
