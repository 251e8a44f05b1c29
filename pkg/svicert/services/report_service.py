"""Run manifests and report documents."""

import logging
import os
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, Optional

import numpy as np

from svicert import __version__
from svicert.config import Config
from svicert.models.results import (
    CopositivityVerdict,
    EnumerationResult,
    LcpInstance,
    R0Verdict,
    RunManifest,
)
from svicert.storage.codec import canonical_dumps
from svicert.storage.files import report_document
from svicert.utils.helpers import file_digest

logger = logging.getLogger(__name__)


def _vector(value: Optional[np.ndarray]):
    return None if value is None else [float(v) for v in value]


class ReportService:
    """Service for assembling reproducible run reports."""

    @staticmethod
    def build_manifest(command: str, seed: Optional[int], config_paths: Iterable[str] = (),
                       arguments: Optional[Dict[str, Any]] = None) -> RunManifest:
        """Manifest with content digests of every input file."""
        paths = [path for path in config_paths if path]
        digests = {os.path.basename(path): file_digest(path) for path in paths}
        wall_clock = None
        if Config.RECORD_WALL_CLOCK:
            wall_clock = datetime.now(timezone.utc).isoformat()
        return RunManifest(
            command=command,
            seed=seed,
            version=__version__,
            config_paths=paths,
            digests=digests,
            arguments=dict(arguments or {}),
            wall_clock=wall_clock,
        )

    @staticmethod
    def render(kind: str, manifest: RunManifest, result: Dict[str, Any]) -> str:
        return canonical_dumps(report_document(kind, manifest, result))

    @staticmethod
    def emit(kind: str, manifest: RunManifest, result: Dict[str, Any], out: Optional[str] = None) -> str:
        """Write the report to ``out``, or to stdout when no path is given."""
        text = ReportService.render(kind, manifest, result)
        if out and out != "-":
            with open(out, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
            logger.info(f"Wrote {kind} report to {out}")
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
        return text

    @staticmethod
    def oracle_result(lcp: LcpInstance, enumeration: EnumerationResult, copositive: CopositivityVerdict,
                      r0: R0Verdict, lemke=None) -> Dict[str, Any]:
        """Result section of an ``oracle`` report."""
        result = {
            "name": lcp.name,
            "dim": lcp.dim,
            "solutions": [_vector(x) for x in enumeration.solutions],
            "supports": [list(s) for s in enumeration.supports],
            "degenerate_supports": [list(s) for s in enumeration.degenerate_supports],
            "copositivity": {
                "status": copositive.status,
                "witness": _vector(copositive.witness),
                "value": copositive.value,
                "lower_bound": copositive.lower_bound,
                "nodes": copositive.nodes,
            },
            "r0": {
                "status": r0.status,
                "witness": _vector(r0.witness),
                "support": list(r0.support) if r0.support is not None else None,
            },
        }
        if lemke is not None:
            result["lemke"] = {"status": lemke.status, "x": _vector(lemke.x), "pivots": lemke.pivots}
        return result
