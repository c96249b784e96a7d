"""Report formatting settings"""

# Version stamped on every document and report
FORMAT_VERSION = 1

# Printed at the top of every text report
VALIDITY_NOTE = (
    "note: provability is replaced by validity in the supplied finite structures "
    "and in the companion models of bounded size; only finite disjunctions are represented"
)

RULE = "=" * 80

HEADER_TEMPLATE = """{rule}
overtopos-sites {command} (format-version {version})
{note}
{rule}"""

SECTION_TEMPLATE = """
{title}
{underline}"""

# Exit statuses
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2
