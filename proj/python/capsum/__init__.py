"""Capsule-endoscopy summarization pipeline.

Configs, summaries, annotations and reports cross the boundary as plain dicts.
"""

import json
import os

from . import _core
from ._core import ConfigError, DataError, InvariantError, TrainingError

__all__ = [
    "ConfigError",
    "DataError",
    "InvariantError",
    "TrainingError",
    "default_config",
    "load_config",
    "simulate",
    "train_selector",
    "summarize",
    "ablate",
    "evaluate",
    "consistency",
    "generate_exam",
    "summarize_exam",
    "evaluate_summaries",
    "set_logging",
]

set_logging = _core.set_logging


def _dump(config):
    return json.dumps(config)


def default_config():
    return json.loads(_core.default_config())


def load_config(path):
    return json.loads(_core.load_config(os.fspath(path)))


def simulate(config):
    _core.simulate(_dump(config))


def train_selector(config):
    _core.train_selector(_dump(config))


def summarize(config, variant="full", dump_contexts=False):
    _core.summarize(_dump(config), variant, dump_contexts)


def ablate(config, variant):
    _core.ablate(_dump(config), variant)


def evaluate(config, method="full"):
    """Writes the report files under the config's out_dir and returns the text table."""
    return _core.evaluate(_dump(config), method)


def consistency(config, dir_a, dir_b, name_a="a", name_b="b"):
    return json.loads(_core.consistency(_dump(config), os.fspath(dir_a), os.fspath(dir_b), name_a, name_b))


def generate_exam(sim_config):
    """Returns (exam JSONL text, annotations dict, ground truth dict)."""
    exam, annotations, truth = _core.generate_exam(json.dumps(sim_config))
    return exam, json.loads(annotations), json.loads(truth)


def summarize_exam(exam_jsonl, head, config, variant="full"):
    return json.loads(_core.summarize_exam(exam_jsonl, json.dumps(head), _dump(config), variant))


def evaluate_summaries(summaries, annotations, config):
    return json.loads(
        _core.evaluate_summaries(
            [json.dumps(s) for s in summaries], [json.dumps(a) for a in annotations], _dump(config)
        )
    )
