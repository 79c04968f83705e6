"""Published E2E-PLR tables for the three LEO elevation scenarios.

``data/published.csv`` holds every printed cell. Table I's N=20 PD+PS block
prints DT labels 0.25/0.5/0.75/1 but its values correspond to DT =
0.2/0.4/0.6/0.8; ``dt`` stores the value that generated the cell and
``printed_dt`` the label as printed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

__all__ = ["PublishedCell", "load_published", "table_config_text", "golden_text", "TABLES"]

TABLES = (1, 2, 3)


@dataclass(frozen=True)
class PublishedCell:
    table: int
    channel_1: str
    channel_2: str
    n: int
    panel: str                # "pdps" or "nc"
    lb: float
    dt: float | None
    k: int | None
    printed_dt: float | None
    value: float
    highlighted: bool

    @property
    def single_path(self) -> str | None:
        """Name of the only channel in use, if LB pins the traffic to one path."""
        if self.lb == 1.0:
            return self.channel_1
        if self.lb == 0.0:
            return self.channel_2
        return None


def _opt(cast, text):
    return cast(text) if text != "" else None


def parse_published(text: str) -> list[PublishedCell]:
    cells = []
    for row in csv.DictReader(io.StringIO(text)):
        cells.append(
            PublishedCell(
                table=int(row["table"]),
                channel_1=row["channel_1"],
                channel_2=row["channel_2"],
                n=int(row["n"]),
                panel=row["panel"],
                lb=float(row["lb"]),
                dt=_opt(float, row["dt"]),
                k=_opt(int, row["k"]),
                printed_dt=_opt(float, row["printed_dt"]),
                value=float(row["e2e_plr"]),
                highlighted=row["highlighted"] == "1",
            )
        )
    return cells


def _data(name: str) -> str:
    return (resources.files("dcloss") / "data" / name).read_text()


def load_published(path: str | Path | None = None) -> list[PublishedCell]:
    """All printed cells, or those of a user CSV with the same columns."""
    text = Path(path).read_text() if path is not None else _data("published.csv")
    return parse_published(text)


def table_config_text(table: int) -> str:
    return _data(f"table{table}.cfg")


def golden_text(table: int) -> str:
    return _data(f"table{table}.golden.csv")
