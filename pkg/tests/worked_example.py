"""Eight-subgroup generalisation example over X1..X4 with Z = {X1, X2}.

Each subgroup's (W, Y) table is chosen so the critical-ratio test gives the
listed sign at gamma = 0.95; the two uncertain subgroups pool to a positive
table (z about 2.46).
"""

import numpy as np

from deep.dataset import BinaryDataset, CrossTable
from deep.patterns import DescriptorValue, Pattern
from deep.stats import Sign
from deep.structure import structure_from_names

POS = CrossTable(40, 10, 10, 40)
NEG = CrossTable(10, 40, 40, 10)
UNC = CrossTable(13, 7, 7, 13)

CELLS = [
    ((1, 1, 0, 0), "+", POS),
    ((1, 1, 1, 0), "+", POS),
    ((1, 0, 0, 1), "+", POS),
    ((0, 0, 1, 0), "-", NEG),
    ((1, 0, 1, 1), "-", NEG),
    ((1, 1, 1, 1), "-", NEG),
    ((0, 0, 0, 1), "?", UNC),
    ((0, 0, 1, 1), "?", UNC),
]

EXPECTED = {
    "(1,1,*,0;+)",
    "(1,0,0,1;+)",
    "(0,0,1,0;-)",
    "(1,*,1,1;-)",
    "(0,0,x,1;+)",
}

NAMES = ("X1", "X2", "X3", "X4", "W", "Y")


def dataset() -> BinaryDataset:
    rows = []
    for key, _, t in CELLS:
        for (w, y), count in zip(((1, 1), (1, 0), (0, 1), (0, 0)), t.as_tuple()):
            rows.extend([key + (w, y)] * count)
    cols = np.array(rows, dtype=np.int8).T
    return BinaryDataset(NAMES, cols, 4, 5)


def structure(d=None):
    d = dataset() if d is None else d
    return structure_from_names(d, ["X1", "X2"], ["X3", "X4"])


def initial_patterns():
    vars_ = (0, 1, 2, 3)
    return [
        Pattern(vars_, tuple(DescriptorValue(v) for v in key), Sign(s), t)
        for key, s, t in CELLS
    ]


def write_csv(path) -> None:
    from deep.dataset import write_csv as _write

    _write(dataset(), path)
