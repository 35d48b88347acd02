"""Print the deviation-onset couplings found in a results tree.

usage: python3 scripts/summarize_onsets.py RESULTS_DIR
"""
import json
import sys
from pathlib import Path


def main(root: str) -> None:
    reports = sorted(Path(root).glob("*/*_report.json"))
    for path in reports:
        rep = json.loads(path.read_text())
        onsets = rep.get("deviation_onset")
        if onsets is None:
            continue
        cfg = rep["config"]
        grid = cfg["couplings"]
        desc = f"{path.parent.name:<22} M={cfg['order']} grid [{grid[0]:g}, {grid[-1]:g}]"
        parts = [f"{fam}={'none' if v is None else f'{v:g}'}" for fam, v in sorted(onsets.items())]
        print(desc, " ".join(parts))


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    main(sys.argv[1])
