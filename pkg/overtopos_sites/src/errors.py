"""Exceptions raised by the site constructions"""
from typing import Optional


class SiteError(Exception):
    """Base class for every error raised by the package"""


class DocumentError(SiteError):
    """A workspace document could not be parsed"""

    def __init__(self, message: str, source: str = "<input>", line: Optional[int] = None,
                 column: Optional[int] = None):
        self.source = source
        self.line = line
        self.column = column
        location = source
        if line is not None:
            location += f":{line}"
            if column is not None:
                location += f":{column}"
        super().__init__(f"{location}: {message}")


class UnresolvedReference(SiteError):
    """A name used in a document does not resolve"""

    def __init__(self, section: str, name: str, referrer: str):
        self.section = section
        self.name = name
        super().__init__(f"{referrer} refers to unknown {section} entry '{name}'")


class PreconditionError(SiteError):
    """An operation was called on input violating a named invariant"""

    def __init__(self, invariant: str, detail: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}")


class FragmentError(PreconditionError):
    """A fragment could not be compiled"""


class LimitMissing(SiteError):
    """A limit required by a construction does not exist in the finite category"""


class InapplicableCheck(SiteError):
    """A check does not apply to its input (e.g. no terminal object)"""


class PointError(SiteError):
    """A point candidate failed its cartesian or continuity flag"""


class BasisClosureError(SiteError):
    """Saturating a basis exceeded the configured family cap"""
