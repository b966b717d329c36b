"""
Configuration and report validation.

Validates explicitly given run configuration keys and written JSON reports
against their JSON Schemas. Fails fast on any error - no auto-fixing.
"""
import json
from pathlib import Path
from typing import Dict, List, Tuple

import jsonschema

SCHEMA_DIR = Path(__file__).parent.parent / "data" / "schema"
CONFIG_SCHEMA_PATH = SCHEMA_DIR / "run_config.schema.json"
REPORT_SCHEMA_PATH = SCHEMA_DIR / "report.schema.json"


def load_schema(schema_path: Path) -> Dict:
    """
    Read a JSON Schema file.

    Raises:
        FileNotFoundError: If the schema file is missing
        json.JSONDecodeError: If it is not valid JSON
    """
    with open(schema_path, "r", encoding="utf-8") as f:
        return json.load(f)


def _collect_errors(instance: object, schema: Dict) -> List[str]:
    validator = jsonschema.Draft7Validator(schema)
    errors = []
    for error in sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path)):
        location = "/".join(str(part) for part in error.absolute_path)
        errors.append(f"{location}: {error.message}" if location else error.message)
    return errors


def validate_config(data: Dict, schema_path: Path = CONFIG_SCHEMA_PATH) -> Tuple[bool, List[str]]:
    """
    Validate the explicitly given configuration keys of a run.

    Args:
        data: Coerced key -> value mapping including "subcommand"
        schema_path: Path to the run configuration schema

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    try:
        schema = load_schema(schema_path)
    except Exception as e:
        return False, [f"Failed to load schema: {e}"]
    errors = _collect_errors(data, schema)
    return len(errors) == 0, errors


def validate_report_file(file_path: Path, schema_path: Path = REPORT_SCHEMA_PATH) -> Tuple[bool, List[str]]:
    """
    Validate a JSON report written by a run.

    Args:
        file_path: Path to the report JSON file
        schema_path: Path to the report schema

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    errors = []

    try:
        schema = load_schema(schema_path)
    except Exception as e:
        errors.append(f"Failed to load schema: {e}")
        return False, errors

    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        errors.append(f"Invalid JSON: {e}")
        return False, errors
    except Exception as e:
        errors.append(f"Failed to read file: {e}")
        return False, errors

    if not isinstance(data, dict):
        errors.append("Report file must contain a JSON object")
        return False, errors

    errors.extend(_collect_errors(data, schema))

    # Row keys must match the declared columns
    columns = data.get("columns")
    if isinstance(columns, list):
        for idx, row in enumerate(data.get("rows", [])):
            if isinstance(row, dict) and set(row) != set(columns):
                errors.append(f"Row {idx}: keys {sorted(row)} do not match columns {sorted(columns)}")
                break

    return len(errors) == 0, errors
