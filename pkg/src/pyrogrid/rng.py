"""Named, step-aligned random substreams derived from one root seed."""

from __future__ import annotations

import zlib

import numpy as np


def _code(name: str) -> int:
    return zlib.crc32(name.encode())


class StreamBank:
    """One generator per (module, component); draws are aligned to simulation steps.

    Each call to :meth:`draws` for a given stream must ask for the same count.
    Skipped steps are burned so the draw for step ``k`` is fixed by
    ``(seed, module, component, k)`` alone, regardless of which earlier steps
    consumed it.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[tuple, list] = {}

    def generator(self, module: str, kind: str = "run", ident: int = 0) -> np.random.Generator:
        key = (module, kind, ident)
        if key not in self._streams:
            ss = np.random.SeedSequence(self.seed, spawn_key=(_code(module), _code(kind), int(ident)))
            self._streams[key] = [np.random.default_rng(ss), 0]
        return self._streams[key][0]

    def draws(self, module: str, component: tuple[str, int], step: int, n: int) -> np.ndarray:
        gen = self.generator(module, *component)
        entry = self._streams[(module, *component)]
        if step < entry[1]:
            raise ValueError(f"stream {module}/{component} already advanced past step {step}")
        if step > entry[1]:
            gen.random((step - entry[1]) * n)
        entry[1] = step + 1
        return gen.random(n)
