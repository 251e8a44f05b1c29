"""Persistence layer: canonical JSON documents for problems, configs and reports."""

from svicert.storage.codec import ConfigValidationError, canonical_dumps, read_document, write_document
from svicert.storage.files import (
    cournot_config_from_dict,
    cournot_config_to_dict,
    lcp_from_dict,
    lcp_to_dict,
    power_config_from_dict,
    power_config_to_dict,
    problem_from_dict,
    problem_to_dict,
    read_cournot_config,
    read_lcp,
    read_power_config,
    read_problem,
    read_report,
    report_document,
    write_lcp,
    write_problem,
    write_trace,
)

__all__ = [
    "ConfigValidationError",
    "canonical_dumps",
    "read_document",
    "write_document",
    "cournot_config_from_dict",
    "cournot_config_to_dict",
    "lcp_from_dict",
    "lcp_to_dict",
    "power_config_from_dict",
    "power_config_to_dict",
    "problem_from_dict",
    "problem_to_dict",
    "read_cournot_config",
    "read_lcp",
    "read_power_config",
    "read_problem",
    "read_report",
    "report_document",
    "write_lcp",
    "write_problem",
    "write_trace",
]
