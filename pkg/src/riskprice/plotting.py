"""Generation of standalone plot scripts.

A script only reads the CSV files written next to it and draws one or two
panels with matplotlib. Nothing from this package is imported by the script,
so figures can be redrawn or restyled without rerunning an experiment.
"""

from __future__ import annotations

import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

_HEADER = '''"""{title}

Generated plot script. Reads {sources} and writes {png}.
Run with: python {script}
"""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def load(name):
    """Columns of a result file as lists of floats; ``#`` lines are skipped."""
    with open(HERE / name, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    return {{k: [float(r[i]) for r in body] for i, k in enumerate(header)}}


'''


@dataclass(frozen=True)
class Series:
    column: str
    label: str
    style: str = "-"


@dataclass(frozen=True)
class Panel:
    csv: str
    x: str
    series: Sequence[Series]
    xlabel: str = "x"
    ylabel: str = "price"
    title: str = ""
    marker: Optional[str] = None


@dataclass
class PlotScript:
    title: str
    panels: list[Panel] = field(default_factory=list)

    def render(self, script_name: str, png_name: str) -> str:
        sources = sorted({p.csv for p in self.panels})
        out = [_HEADER.format(title=self.title, sources=", ".join(sources), png=png_name, script=script_name)]
        for i, name in enumerate(sources):
            out.append(f"data{i} = load({name!r})\n")
        width = 6.0 * len(self.panels)
        out.append(f"fig, axes = plt.subplots(1, {len(self.panels)}, figsize=({width}, 4.5), squeeze=False)\n")
        for k, panel in enumerate(self.panels):
            d = f"data{sources.index(panel.csv)}"
            out.append(f"\nax = axes[0][{k}]\n")
            for s in panel.series:
                mk = f", marker={panel.marker!r}" if panel.marker else ""
                out.append(f"ax.plot({d}[{panel.x!r}], {d}[{s.column!r}], {s.style!r}{mk}, label={s.label!r})\n")
            out.append(f"ax.set_xlabel({panel.xlabel!r})\n")
            out.append(f"ax.set_ylabel({panel.ylabel!r})\n")
            if panel.title:
                out.append(f"ax.set_title({panel.title!r})\n")
            out.append("ax.grid(alpha=0.3)\n")
            out.append("ax.legend(fontsize=8)\n")
        out.append(f"\nfig.suptitle({self.title!r})\n")
        out.append("fig.tight_layout()\n")
        out.append(f"fig.savefig(HERE / {png_name!r}, dpi=120)\n")
        return "".join(out)

    def write(self, directory, stem: str) -> Path:
        directory = Path(directory)
        script = directory / f"{stem}_plot.py"
        script.write_text(self.render(script.name, f"{stem}.png"))
        return script


def render_figure(script: Path, timeout: float = 300.0) -> Path:
    """Run a generated script in a fresh interpreter; returns the PNG path."""
    proc = subprocess.run(
        [sys.executable, str(script)], capture_output=True, text=True, timeout=timeout, cwd=script.parent
    )
    if proc.returncode != 0:
        raise RuntimeError(f"plot script {script.name} failed:\n{proc.stderr.strip()}")
    return script.with_name(script.name.replace("_plot.py", ".png"))
