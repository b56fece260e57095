"""Provenance-graph anomaly detection and investigation pipeline.

Thin wrapper over the compiled extension. Every pipeline step takes and
produces files on disk, mirroring the command-line tool; functions return
the text the corresponding subcommand would print. Pass ``config`` as a
JSON string using the same schema as the CLI's ``--config`` file.
"""

import json as _json

from ._core import ask, detect, ingest, investigate, scenario, train


def evaluate(flagged, labels, snapshot, mode="both"):
    """Score a flagged-node list against ground-truth labels.

    ``flagged`` may be a detect.json produced by :func:`detect` or a bare
    JSON array of node ids. Returns ``{mode: {tp, fp, fn, precision,
    recall, f1}}`` for each requested mode ("strict", "two_hop" or "both").
    """
    from ._core import evaluate_json

    return _json.loads(evaluate_json(flagged, labels, snapshot, mode))


__all__ = [
    "ask",
    "detect",
    "evaluate",
    "ingest",
    "investigate",
    "scenario",
    "train",
]
