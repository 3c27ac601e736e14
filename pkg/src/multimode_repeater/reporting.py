"""CSV table emission and config-driven tolerance checks."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .config import CHECK_PREFIX, RunManifest


def fmt(value) -> str:
    """Nine significant digits for floats; bools as 0/1."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else f"{v:.9g}"
    return str(value)


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list] = field(default_factory=list)

    def render(self, digest: str) -> str:
        lines = [",".join(["manifest", *self.header])]
        lines += [",".join([digest, *(fmt(v) for v in row)]) for row in self.rows]
        return "\n".join(lines) + "\n"


@dataclass
class CheckResult:
    name: str
    value: float
    low: float
    high: float

    @property
    def passed(self) -> bool:
        return self.low <= self.value <= self.high


def evaluate_checks(cfg: dict, metrics: dict[str, float]) -> list[CheckResult]:
    out = []
    for key in sorted(k for k in cfg if k.startswith(CHECK_PREFIX)):
        name = key[len(CHECK_PREFIX):]
        if name not in metrics:
            continue
        lo, hi = cfg[key]
        out.append(CheckResult(name, float(metrics[name]), lo, hi))
    return out


def unknown_checks(cfg: dict, metrics: dict[str, float]) -> list[str]:
    return sorted(k[len(CHECK_PREFIX):] for k in cfg if k.startswith(CHECK_PREFIX) and k[len(CHECK_PREFIX):] not in metrics)


def write_outputs(out_dir: str, manifest: RunManifest, tables: list[Table], checks: list[CheckResult]) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    digest = manifest.digest
    all_tables = list(tables)
    all_tables.append(
        Table("checks", ["check", "value", "low", "high", "pass"], [[c.name, c.value, c.low, c.high, c.passed] for c in checks])
    )
    paths = []
    for t in all_tables:
        path = os.path.join(out_dir, f"{manifest.subcommand}_{t.name}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(t.render(digest))
        paths.append(path)
    manifest.outputs = [os.path.basename(p) for p in paths]
    mpath = os.path.join(out_dir, f"{manifest.subcommand}.manifest")
    with open(mpath, "w") as fh:
        fh.write(manifest.render())
    return paths + [mpath]
