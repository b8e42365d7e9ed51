"""Reading and writing channel files.

Channel files are JSON documents validated against the schema shipped with
the package (``twc/schema/channel.schema.json``).  Floats are written with
the shortest decimal representation that round-trips (at most 17
significant digits), so a write followed by a read reproduces every
probability bit for bit.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .core import TwoWayChannel, validate_channel
from .errors import InvalidInput
from .madb import MadbChannel
from .memory import JointMarkovNoise, MarkovNoise, MemoryChannelSpec


class SchemaError(InvalidInput):
    """A channel file does not conform to the schema."""


@lru_cache(maxsize=1)
def channel_schema() -> dict:
    """The JSON schema for channel files."""
    text = resources.files("twc").joinpath("schema/channel.schema.json").read_text()
    return json.loads(text)


def validate_document(doc) -> None:
    """Check a parsed document against the schema.

    Raises
    ------
    SchemaError
    """
    try:
        jsonschema.validate(doc, channel_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise SchemaError(f"schema violation at {where}: {exc.message}") from None


def to_document(obj, name: str | None = None) -> dict:
    """JSON-ready document for a channel object."""
    if isinstance(obj, TwoWayChannel):
        doc = {"kind": "twc", "nx1": obj.nx1, "nx2": obj.nx2, "ny1": obj.ny1,
               "ny2": obj.ny2, "matrix": obj.p.tolist()}
    elif isinstance(obj, MadbChannel):
        doc = {"kind": "madb", "q": obj.q, "ny3": obj.ny3, "matrix": obj.p_y3.tolist(),
               "pz1": obj.pz1.tolist(), "pz2": obj.pz2.tolist()}
        if obj.pz3 is not None:
            doc["pz3"] = obj.pz3.tolist()
    elif isinstance(obj, MemoryChannelSpec):
        if isinstance(obj.noise, JointMarkovNoise):
            noise = {"type": "joint", "n1": obj.noise.n1, "n2": obj.noise.n2,
                     "T": obj.noise.chain.T.tolist()}
        else:
            noise = {"type": "independent", "T1": obj.noise[0].T.tolist(),
                     "T2": obj.noise[1].T.tolist()}
        doc = {"kind": "memory", "q1": obj.q1, "q2": obj.q2, "F1": obj.F1.tolist(),
               "F2": obj.F2.tolist(), "noise": noise}
    else:
        raise InvalidInput(f"cannot serialize object of type {type(obj).__name__}")
    if name:
        doc["name"] = name
    return doc


def from_document(doc: dict):
    """Channel object described by a parsed document.

    Raises
    ------
    SchemaError
        If the document does not conform to the schema.
    InvalidInput
        If the matrices fail validation.
    """
    validate_document(doc)
    kind = doc["kind"]
    if kind == "twc":
        return validate_channel(np.array(doc["matrix"], dtype=float), doc["nx1"], doc["nx2"],
                                doc["ny1"], doc["ny2"])
    if kind == "madb":
        ch = MadbChannel(doc["q"], np.array(doc["matrix"], dtype=float), doc["pz1"], doc["pz2"],
                         doc.get("pz3"))
        if ch.ny3 != doc["ny3"]:
            raise InvalidInput(f"matrix has {ch.ny3} columns but ny3 = {doc['ny3']}")
        return ch
    noise = doc["noise"]
    if noise["type"] == "joint":
        nz = JointMarkovNoise.from_transition(np.array(noise["T"], dtype=float),
                                              noise["n1"], noise["n2"])
    else:
        nz = (MarkovNoise(np.array(noise["T1"], dtype=float)),
              MarkovNoise(np.array(noise["T2"], dtype=float)))
    return MemoryChannelSpec(np.array(doc["F1"], dtype=int), np.array(doc["F2"], dtype=int),
                             nz, doc["q1"], doc["q2"])


def dumps(obj, name: str | None = None) -> str:
    """Serialize a channel object to JSON text."""
    return json.dumps(to_document(obj, name), indent=1) + "\n"


def loads(text: str):
    """Parse JSON text into a channel object.

    Raises
    ------
    SchemaError
        On malformed JSON or a schema violation.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return from_document(doc)


def save(obj, path, name: str | None = None) -> None:
    Path(path).write_text(dumps(obj, name))


def load(path):
    """Read a channel file.

    Raises
    ------
    InvalidInput
        If the file is missing or invalid.
    """
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror or exc}") from None
    return loads(text)
