"""
Startup validation for the CSK simulator: code tables, output directories and settings
"""

import logging
import sys
from pathlib import Path
from typing import Callable, List, Tuple
from app.core.config import settings
from app.services.ldpc.tables import LdpcCodeError, RATES, load_address_table, table_filename

logger = logging.getLogger(__name__)

class StartupValidationError(Exception):
    """Raised when startup validation fails"""
    pass

def validate_ldpc_tables() -> Tuple[bool, List[str]]:
    """
    Check that every long-code address table is present and parses

    Returns:
        Tuple of (is_valid, list_of_issues)
    """
    issues = []
    table_dir = Path(settings.LDPC_TABLE_DIR)
    if not table_dir.is_dir():
        issues.append(f"LDPC_TABLE_DIR {table_dir} does not exist")
        return False, issues

    for rate in RATES:
        path = table_dir / table_filename(rate)
        if not path.exists():
            issues.append(f"missing address table for rate {rate}: {path.name}")
            continue
        try:
            load_address_table(path).validate()
        except LdpcCodeError as e:
            issues.append(f"address table {path.name} is invalid: {e}")

    return len(issues) == 0, issues

def validate_small_codes() -> Tuple[bool, List[str]]:
    issues = []
    small_dir = Path(settings.SMALL_CODE_DIR)
    if not small_dir.is_dir():
        issues.append(f"SMALL_CODE_DIR {small_dir} does not exist")
    elif not any(small_dir.glob("*.txt")):
        logger.warning("No small test codes found in %s", small_dir)
    return len(issues) == 0, issues

def validate_output_dirs() -> Tuple[bool, List[str]]:
    """Results and event-log directories must be creatable"""
    issues = []
    for name, value in (("RESULTS_DIR", settings.RESULTS_DIR), ("EXPERIMENT_LOG_DIR", settings.EXPERIMENT_LOG_DIR)):
        path = Path(value)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            issues.append(f"{name} {path} cannot be created: {e}")
    return len(issues) == 0, issues

def validate_cors_origins() -> Tuple[bool, List[str]]:
    issues = []
    if not settings.ALLOWED_ORIGINS:
        issues.append("ALLOWED_ORIGINS is not set")
        return False, issues
    if "*" in settings.ALLOWED_ORIGINS:
        logger.warning("CORS allows every origin")
    return True, issues

VALIDATORS: List[Tuple[str, Callable[[], Tuple[bool, List[str]]]]] = [
    ("LDPC tables", validate_ldpc_tables),
    ("Small codes", validate_small_codes),
    ("Output directories", validate_output_dirs),
    ("CORS origins", validate_cors_origins),
]

def collect_startup_issues() -> List[str]:
    """Run every validator; a validator that raises counts as one issue"""
    found = []
    for name, validator in VALIDATORS:
        try:
            ok, issues = validator()
        except Exception as e:
            logger.error(f"{name} check raised: {e}")
            found.append(f"{name}: check raised {e}")
            continue
        if ok:
            logger.debug(f"{name} check passed")
        else:
            logger.error(f"{name} check failed: {'; '.join(issues)}")
            found.extend(f"{name}: {issue}" for issue in issues)
    return found

def perform_startup_validation(strict: bool = False) -> bool:
    """
    Check tables, directories and settings before serving.

    Args:
        strict: raise instead of only logging when something is wrong

    Raises:
        StartupValidationError: strict mode and at least one issue
    """
    issues = collect_startup_issues()
    if not issues:
        logger.info("Startup checks passed")
        return True
    logger.error(f"{len(issues)} startup issue(s):\n" + "\n".join(f"  - {issue}" for issue in issues))
    if strict:
        raise StartupValidationError("; ".join(issues))
    return False

async def startup_event():
    """Log configuration problems without refusing to start"""
    try:
        perform_startup_validation(strict=False)
    except Exception as e:
        logger.error(f"Startup checks crashed: {e}")

if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    try:
        sys.exit(0 if perform_startup_validation(strict=True) else 1)
    except StartupValidationError as e:
        print(f"startup check failed: {e}", file=sys.stderr)
        sys.exit(1)
