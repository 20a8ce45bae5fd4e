"""Merge sketch files built from shards of one stream."""

from __future__ import annotations

from functools import reduce

from .. import fishmonger, sketches
from ..sketches import IncompatibleSketches


def load_any(path):
    """Load a plain sketch file or a Fishmonger file, by magic."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == fishmonger.sketch.MAGIC:
        return fishmonger.deserialize(data)
    return sketches.deserialize(data)


def save_any(sketch, path) -> None:
    if isinstance(sketch, fishmonger.FishmongerSketch):
        fishmonger.save(sketch, path)
    else:
        sketches.save(sketch, path)


def merge_sketches(items):
    items = list(items)
    if not items:
        raise ValueError("nothing to merge")
    kinds = {type(s) for s in items}
    if len(kinds) > 1:
        raise IncompatibleSketches(f"cannot merge different sketch kinds: {sorted(k.__name__ for k in kinds)}")
    if isinstance(items[0], fishmonger.FishmongerSketch):
        return reduce(lambda a, b: a.merge(b), items)
    return reduce(sketches.merge, items)


def merge_files(paths, out=None):
    """Fold the sketches stored at ``paths`` into one; optionally write it to ``out``."""
    merged = merge_sketches(load_any(p) for p in paths)
    if out is not None:
        save_any(merged, out)
    return merged
