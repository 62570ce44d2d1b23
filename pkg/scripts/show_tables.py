"""Print every sweep table under a directory with its standard errors."""
import sys
from pathlib import Path

import numpy as np
import yaml

from starjam.harness import read_columns, read_table


def show(path: Path) -> None:
    print(f"== {path.name}")
    if path.with_name(path.name + ".meta").exists():
        res = read_table(path)
        print(f"{res.axis_name:>10} " + " ".join(f"{s:>16}" for s in res.schemes))
        for i, x in enumerate(res.axis):
            cells = (f"{m:7.3f} ±{s:6.3f}" + (f" ({n})" if n else "")
                     for m, s, n in zip(res.means[i], res.ses[i], res.infeasible[i]))
            print(f"{x:>10g} " + " ".join(f"{c:>16}" for c in cells))
        return
    x, Y = read_columns(path)
    for xv, row in zip(x, Y):
        print(f"{xv:>10g} " + " ".join(f"{v:10.4f}" for v in row))


def main(root: str) -> None:
    for path in sorted(Path(root).glob("*.dat")):
        show(path)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "results")
