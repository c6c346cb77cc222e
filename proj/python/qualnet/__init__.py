"""Python access to the qualnet core: ingestion, mock/replay pipeline runs,
network views, evaluation and the command line."""

import json

from . import _core
from ._core import QualnetError

__all__ = ["QualnetError", "ingest", "run", "network", "evaluate", "semeval_eval", "kappa", "cli"]


def ingest(corpus, project_id="py", overview=None, concepts=()):
    return json.loads(_core.ingest(corpus, project_id, overview, json.dumps(list(concepts))))


def run(project, provider="mock", stages="extract,map,classify,merge"):
    """Returns (project, report)."""
    project_json, report_json = _core.run(json.dumps(project), provider, stages)
    return json.loads(project_json), json.loads(report_json)


def network(project):
    return json.loads(_core.network(json.dumps(project)))


def evaluate(project, gold):
    return json.loads(_core.evaluate(json.dumps(project), json.dumps(gold)))


def semeval_eval(text, method="cooccurrence"):
    return json.loads(_core.semeval_eval(text, method))


def kappa(labels_a, labels_b):
    return _core.kappa(list(labels_a), list(labels_b))


def cli(*args):
    """Runs the command line in-process; returns (exit_code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
