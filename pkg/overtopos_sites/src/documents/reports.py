"""Deterministic text and JSON reports"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List

from overtopos_sites.config.config import WITNESS_LIMIT
from overtopos_sites.config.report_config import (
    EXIT_FAILURE,
    EXIT_OK,
    FORMAT_VERSION,
    HEADER_TEMPLATE,
    RULE,
    SECTION_TEMPLATE,
    VALIDITY_NOTE,
)

logger = logging.getLogger(__name__)


@dataclass
class Section:
    """A titled block of report lines with a parallel data record"""
    title: str
    witness_limit: int = WITNESS_LIMIT
    lines: List[str] = field(default_factory=list)
    data: Dict[str, Any] = field(default_factory=dict)

    def line(self, text: str) -> None:
        self.lines.append(text)

    def value(self, key: str, value: Any, label: str = None) -> None:
        """Record a scalar both as a text line and in the data"""
        self.data[key] = value
        self.lines.append(f"{label or key}: {value}")

    def witnesses(self, key: str, items: Iterable[str], label: str = None) -> None:
        """Record a list, truncated to the witness limit"""
        items = list(items)
        shown = items[:self.witness_limit]
        self.data[key] = {"count": len(items), "shown": shown}
        self.lines.append(f"{label or key}: {len(items)}")
        self.lines.extend(f"  - {item}" for item in shown)
        if len(items) > len(shown):
            self.lines.append(f"  ... {len(items) - len(shown)} more")


@dataclass
class Report:
    """One command's report: sections in insertion order plus failures and warnings"""
    command: str
    witness_limit: int = WITNESS_LIMIT
    sections: List[Section] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def section(self, title: str) -> Section:
        section = Section(title, self.witness_limit)
        self.sections.append(section)
        return section

    def fail(self, message: str) -> None:
        self.failures.append(message)

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)

    def exit_status(self, strict: bool = False) -> int:
        if self.failures or (strict and self.warnings):
            return EXIT_FAILURE
        return EXIT_OK

    def status(self, strict: bool = False) -> str:
        return "ok" if self.exit_status(strict) == EXIT_OK else "failed"

    def render_text(self, strict: bool = False) -> str:
        parts = [HEADER_TEMPLATE.format(rule=RULE, command=self.command, version=FORMAT_VERSION, note=VALIDITY_NOTE)]
        for section in self.sections:
            parts.append(SECTION_TEMPLATE.format(title=section.title, underline="-" * len(section.title)))
            parts.extend(section.lines)
        parts.append("")
        parts.append(RULE)
        for message in self.warnings[:self.witness_limit]:
            parts.append(f"warning: {message}")
        for message in self.failures[:self.witness_limit]:
            parts.append(f"failure: {message}")
        hidden = max(0, len(self.warnings) - self.witness_limit) + max(0, len(self.failures) - self.witness_limit)
        if hidden:
            parts.append(f"... {hidden} more messages")
        parts.append(f"status: {self.status(strict)} ({len(self.failures)} failures, {len(self.warnings)} warnings)")
        return "\n".join(parts) + "\n"

    def to_dict(self, strict: bool = False) -> Dict[str, Any]:
        return {
            "format-version": FORMAT_VERSION,
            "command": self.command,
            "note": VALIDITY_NOTE,
            "sections": [{"title": s.title, "data": s.data} for s in self.sections],
            "failures": self.failures[:self.witness_limit],
            "warnings": self.warnings[:self.witness_limit],
            "status": self.status(strict),
        }

    def write_json(self, path: str, strict: bool = False) -> None:
        write_document(path, self.to_dict(strict))


def write_document(path: str, document: Dict[str, Any]) -> None:
    """Write JSON with sorted keys so that reruns are byte-identical"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w") as f:
        json.dump(document, f, indent=4, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    logger.info(f"Wrote {target}")
