import os
from typing import Optional

from rich.console import Console

# stderr only: stdout is reserved for JSON/CSV reports
console = Console(stderr=True)

DEFAULT_EXPORT_DIR = "exports"
DEFAULT_SCAN_POINTS = 4096
DEFAULT_R_MAX = 100.0

# ---------------- Debug helpers ----------------

def debug_level() -> int:
    # LAGCHECK_DEBUG unset/0 = silent; 1 = basic; 2 = verbose
    try:
        return int(os.getenv("LAGCHECK_DEBUG", "0"))
    except ValueError:
        return 0

def _dbg(msg: str, level: int = 1) -> None:
    if debug_level() >= level:
        console.print(msg, markup=False, highlight=False)

# ---------------- Typed env lookups ----------------

def _env_int(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        _dbg(f"[debug] {name}={raw!r} is not an integer, using {default}")
        return default
    if value < minimum:
        _dbg(f"[debug] {name}={value} below {minimum}, using {default}")
        return default
    return value

def _env_float(name: str, default: float, minimum: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = float(raw)
    except ValueError:
        _dbg(f"[debug] {name}={raw!r} is not a number, using {default}")
        return default
    if not value >= minimum:
        _dbg(f"[debug] {name}={value} below {minimum}, using {default}")
        return default
    return value

def export_dir() -> str:
    return (os.getenv("LAGCHECK_EXPORT_DIR") or "").strip() or DEFAULT_EXPORT_DIR

def scan_points() -> int:
    return _env_int("LAGCHECK_SCAN_POINTS", DEFAULT_SCAN_POINTS, minimum=64)

def default_r_max() -> float:
    return _env_float("LAGCHECK_R_MAX", DEFAULT_R_MAX, minimum=10.0)

def resolve_output_path(path: Optional[str]) -> Optional[str]:
    """
    A bare file name lands in the export directory; anything with a
    directory component is used as given.
    """
    if not path:
        return None
    if os.path.dirname(path):
        return path
    return os.path.join(export_dir(), path)
