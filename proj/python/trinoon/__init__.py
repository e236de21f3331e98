# Copyright 2026 The trinoon Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Triangle network photonic distributions, LP certificates and local model search."""

import json

import numpy as np

from ._trinoon import (
    AllDiverged,
    ConfigError,
    Distribution,
    PremiseViolation,
    augment_with_failure_bits,
    closed_form,
    coarse_graining_names,
    generate,
    gradient_check,
    lemma1_interval,
    read_distribution,
    run_cli,
    write_distribution,
)
from . import _trinoon

__all__ = [
    "AllDiverged",
    "ConfigError",
    "Distribution",
    "PremiseViolation",
    "augment_with_failure_bits",
    "certify",
    "closed_form",
    "coarse_graining_names",
    "desk_schedule",
    "from_array",
    "generate",
    "gradient_check",
    "lemma1_interval",
    "meta",
    "full_schedule",
    "read_distribution",
    "run_cli",
    "search",
    "write_distribution",
]


def meta(dist):
    return json.loads(dist.meta_json)


def from_array(alphabets, probs, meta=None):
    """Builds a Distribution from three label lists and a probability tensor."""
    probs = np.ascontiguousarray(probs, dtype=float)
    return _trinoon._from_parts([list(a) for a in alphabets], probs, json.dumps(meta or {}))


def certify(dist, ostars=("0", "4"), mode="exact", M=8, refine=2):
    """Runs the linear program and returns the certificate as a dict."""
    return json.loads(_trinoon._certify(dist, list(ostars), mode, M, refine))


def desk_schedule():
    return json.loads(_trinoon._desk_schedule())


def full_schedule():
    return json.loads(_trinoon._full_schedule())


def search(dist, restarts=10, seed=1, width=40, depth=3, schedule=None, threads=1):
    """Trains local models against dist; returns the search report as a dict."""
    text = "" if schedule is None else json.dumps(schedule)
    return json.loads(_trinoon._search(dist, restarts, seed, width, depth, text, threads))
