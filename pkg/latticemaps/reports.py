from __future__ import annotations

import csv
import io
import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Sequence

from latticemaps.exact import parse_rat

logger = logging.getLogger(__name__)

_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")


def render_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _revive(value: Any) -> Any:
    if isinstance(value, str) and _RATIONAL.match(value):
        return parse_rat(value)
    if isinstance(value, list):
        return [_revive(item) for item in value]
    if isinstance(value, dict):
        return {key: _revive(item) for key, item in value.items()}
    return value


class ReportWriter:
    """Writes JSON and CSV reports; rationals travel as ``"p/q"`` strings."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def write_json(self, payload: Dict[str, Any]) -> Path:
        self.path.write_text(render_json(payload), encoding="utf-8")
        logger.info("wrote %s", self.path)
        return self.path

    def write_csv(self, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        self.path.write_text(render_csv(header, rows), encoding="utf-8")
        logger.info("wrote %s (%s rows)", self.path, len(rows))
        return self.path

    def read_json(self) -> Any:
        return _revive(json.loads(self.path.read_text(encoding="utf-8")))

    def read_csv(self) -> List[Dict[str, Any]]:
        with self.path.open(newline="", encoding="utf-8") as handle:
            return [
                {key: _revive(value) if value != "" else None for key, value in row.items()}
                for row in csv.DictReader(handle)
            ]

