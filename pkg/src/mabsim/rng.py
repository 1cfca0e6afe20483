"""Labelled, counter-based random streams.

Every random draw in a simulation comes from a stream identified by the
master seed plus a tuple of labels such as ``(run_id, agent_id, "reward")``.
Streams are built on numpy's Philox bit generator keyed through a
``SeedSequence`` spawn key, so two streams with the same labels always
produce the same sequence no matter which process creates them or in what
order.
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

Label = Union[int, str]


def _label_key(label: Label) -> int:
    if isinstance(label, bool):
        raise TypeError("stream labels must be int or str, not bool")
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"integer stream labels must be non-negative, got {label}")
        return int(label)
    if isinstance(label, str):
        # Offset keeps string labels out of the small-integer range used by ids.
        return (1 << 32) + zlib.crc32(label.encode("utf-8"))
    raise TypeError(f"unsupported stream label {label!r}")


class RngStream:
    """A deterministic random stream derived from ``(seed, *labels)``."""

    def __init__(self, seed: int, *labels: Label) -> None:
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self.labels = tuple(labels)
        key = tuple(_label_key(lab) for lab in labels)
        self._gen = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=key))
        )

    def child(self, *labels: Label) -> "RngStream":
        """Fresh stream whose labels extend this one's."""
        return RngStream(self.seed, *self.labels, *labels)

    def uniform(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def normal(self, size: int) -> np.ndarray:
        return self._gen.standard_normal(size)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, labels={self.labels!r})"
