"""Bundled run configurations for the figure reproductions.

``RUNS`` pairs each file with the command it is meant for. The expected
SHA-256 of every CSV output is stored in ``checksums.json`` and can be
rechecked with :func:`verify`.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources

RUNS = (
    ("device_sec4.cfg", "validate"),
    ("fig1.cfg", "cancel"),
    ("fig2.cfg", "cancel"),
    ("fig4.cfg", "cancel"),
    ("fig5.cfg", "squeeze"),
    ("fig5.cfg", "spectrum"),
    ("fig6.cfg", "map"),
    ("fig7a.cfg", "map"),
    ("fig7b.cfg", "map"),
    ("fig8a.cfg", "spectrum"),
    ("fig8b.cfg", "spectrum"),
    ("stability.cfg", "stability"),
)


def path(name: str):
    return resources.files(__name__) / name


def read(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def render_run(name: str, command: str, fmt: str = "csv") -> tuple[int, str]:
    """Run a bundled recipe in-process; returns (exit status, output text)."""
    from ..cli import render, run_command
    from ..config import parse_config

    run = parse_config(read(name), command, {"output.format": fmt})
    table = run_command(run)
    return table.status, render(run, table, fmt) if table.columns else ""


def digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def expected() -> dict:
    return json.loads(read("checksums.json"))


def verify(names=None) -> dict:
    """Recompute checksums; maps ``"file command"`` to (matches, digest)."""
    want = expected()
    out = {}
    for name, command in RUNS:
        key = f"{name} {command}"
        if names is not None and key not in names:
            continue
        _, text = render_run(name, command)
        d = digest(text)
        out[key] = (want.get(key) == d, d)
    return out


def refresh() -> dict:
    """Recompute every checksum and write ``checksums.json`` next to the recipes."""
    table = {f"{name} {command}": digest(render_run(name, command)[1]) for name, command in RUNS}
    with open(path("checksums.json"), "w", encoding="utf-8") as fh:
        json.dump(table, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return table
