"""Configuration settings for the site checker"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Directory paths
ROOT_DIR = Path(__file__).parent.parent
DATA_DIR = ROOT_DIR / "data"
WORKSPACE_DIR = DATA_DIR / "workspaces"

# Enumeration bounds
DEFAULT_BOUND = int(os.getenv("OVERTOPOS_BOUND", "2"))
WITNESS_LIMIT = int(os.getenv("OVERTOPOS_WITNESS_LIMIT", "20"))

# Carrier bound of the companion models that stand in for provability
COMPANION_BOUND = int(os.getenv("OVERTOPOS_COMPANION_BOUND", "2"))

# Search caps
MAX_BASIS_FAMILIES = int(os.getenv("OVERTOPOS_MAX_FAMILIES", "5000"))
MAX_SUBSET_ARROWS = int(os.getenv("OVERTOPOS_MAX_SUBSETS", "16"))
MAX_FRAGMENT_ARROWS = int(os.getenv("OVERTOPOS_MAX_ARROWS", "2000"))

# Logging and progress bars (both go to stderr)
LOG_LEVEL = os.getenv("OVERTOPOS_LOG_LEVEL", "WARNING").upper()
SHOW_PROGRESS = os.getenv("OVERTOPOS_PROGRESS", "0") == "1"
