"""Run manifests, deterministic JSON reports, and size-report rendering.

Reports separate a deterministic `result` section (byte-identical across
reruns with equal inputs and caps) from a `run` section holding wall-clock
timings.  Size reports are written three ways: JSON, a CSV table, and a
log-scale figure rendered next to them.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from . import __version__


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


@dataclass
class RunManifest:
    command: str
    inputs: dict = field(default_factory=dict)  # name -> sha256 prefix
    caps: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)
    timings: dict = field(default_factory=dict)

    def add_input(self, name: str, path) -> None:
        self.inputs[name] = file_hash(path)

    def time_block(self, name: str, t0: float) -> None:
        self.timings[name] = round(time.time() - t0, 3)

    def result_section(self) -> dict:
        return {
            "command": self.command,
            "inputs": dict(sorted(self.inputs.items())),
            "caps": dict(sorted(self.caps.items())),
            "version": __version__,
        }

    def full(self, result: dict) -> dict:
        return {
            "manifest": self.result_section(),
            "result": result,
            "run": {
                "python": platform.python_version(),
                "wall_clock": self.timings,
            },
        }


def write_report(doc: dict, path) -> None:
    """Manifest and result serialize canonically; the run section may vary."""
    out = (
        '{"manifest":'
        + canonical_json(doc["manifest"])
        + ',"result":'
        + canonical_json(doc["result"])
        + ',"run":'
        + json.dumps(doc["run"])
        + "}"
    )
    Path(path).write_text(out + "\n")


def render_text(result: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key, val in result.items():
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.append(render_text(val, indent + 1))
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            lines.append(f"{pad}{key}:")
            for item in val:
                lines.append(f"{pad}  - " + ", ".join(f"{k}={v}" for k, v in item.items()))
        else:
            lines.append(f"{pad}{key}: {val}")
    return "\n".join(lines)


def write_size_outputs(report, stem: Path) -> list[Path]:
    """Write the delimited table and the rendered figure next to the JSON report."""
    csv_path = stem.with_suffix(".csv")
    rows = report.rows
    with open(csv_path, "w") as f:
        f.write("n,arity,gates\n")
        for (n, a, g) in rows:
            f.write(f"{n},{a},{g}\n")
    png_path = stem.with_suffix(".png")
    _render_size_figure(report, png_path)
    return [csv_path, png_path]


def _render_size_figure(report, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [r[0] for r in report.rows]
    gates = [r[2] for r in report.rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(ns, gates, "o-", label="tower gates")
    base = gates[0] / report.ratio ** ns[0]
    fit = [base * report.ratio**n for n in ns]
    ax.semilogy(ns, fit, "--", label=f"fit ratio {report.ratio:.2f}")
    ax.set_xlabel("n")
    ax.set_ylabel("gate count")
    ax.set_xticks(ns)
    ax.legend(frameon=False)
    ax.set_title(f"residual {report.residual:.1%}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
