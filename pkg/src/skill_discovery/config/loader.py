"""
Configuration loader.

Loads, validates, merges and resolves pipeline configuration files.
"""

import json
from pathlib import Path
from typing import Any, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from ..exceptions import ConfigError
from .resolver import read_credential, resolve_env_vars
from .types import ClientConfig, LoadResult, PipelineConfig, ResolvedClient


def _format_validation_errors(error: ValidationError) -> list[str]:
    messages = []
    for err in error.errors():
        loc = ".".join(str(x) for x in err["loc"])
        messages.append(f"Missing or invalid field: {loc} ({err['msg']})")
    return messages


def resolve_client(client: ClientConfig, require_key: bool = False) -> tuple[
    ResolvedClient, list[str], list[str]
]:
    """
    Substitute environment references in client settings and read the credential.

    Returns:
        Tuple of (resolved client, errors, warnings)
    """
    errors: list[str] = []
    warnings: list[str] = []

    endpoint, missing = resolve_env_vars(client.endpoint)
    if missing:
        errors.append(f"Missing environment variable for client.endpoint: {', '.join(missing)}")

    api_key = read_credential(client.api_key_env_var) or ""
    if client.kind == "http" and not api_key:
        message = f"Credential environment variable not set: {client.api_key_env_var}"
        if require_key:
            errors.append(message)
        else:
            warnings.append(message)

    resolved = ResolvedClient(
        kind=client.kind,
        endpoint=endpoint,
        model_name=client.model_name,
        timeout_s=client.timeout_s,
        retries=client.retries,
        parallelism=client.parallelism,
        mock_error_rate=client.mock_error_rate,
        api_key=api_key,
    )
    return resolved, errors, warnings


def load_config(
    config_path: Optional[str | Path] = None,
    require_key: bool = False,
) -> LoadResult:
    """
    Load and validate a pipeline configuration file.

    Args:
        config_path: Path to the configuration JSON file; None means all defaults
        require_key: Treat a missing LLM credential as an error (http client only)

    Returns:
        LoadResult with config or errors
    """
    raw_config: dict[str, Any] = {}

    if config_path is not None:
        config_path = Path(config_path)

        if not config_path.exists():
            return LoadResult(
                success=False,
                errors=[f"Config file not found: {config_path}"],
            )

        # A .env beside the config may hold the credential
        load_dotenv(config_path.parent / ".env", override=False)

        try:
            raw_config = json.loads(config_path.read_text())
        except json.JSONDecodeError as e:
            return LoadResult(success=False, errors=[f"Failed to parse config file: {e}"])
        except OSError as e:
            return LoadResult(success=False, errors=[f"Failed to read config file: {e}"])

        if not isinstance(raw_config, dict):
            return LoadResult(success=False, errors=["Config root must be an object"])

    try:
        config = PipelineConfig.model_validate(raw_config)
    except ValidationError as e:
        return LoadResult(success=False, errors=_format_validation_errors(e))

    client, errors, warnings = resolve_client(config.client, require_key=require_key)
    if errors:
        return LoadResult(success=False, errors=errors, warnings=warnings)

    return LoadResult(success=True, config=config, client=client, warnings=warnings)


def merge_overrides(config: PipelineConfig, overrides: dict[str, Any]) -> PipelineConfig:
    """
    Apply flag overrides given as dotted snake_case paths and revalidate.

    None values are ignored so unset flags never shadow the file.

    Raises:
        ConfigError: If a path is unknown or the merged config is invalid
    """
    data = config.model_dump()

    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"Unknown config section: {dotted}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"Unknown config field: {dotted}")
        node[parts[-1]] = value

    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError("; ".join(_format_validation_errors(e))) from e


def default_config_dict() -> dict[str, Any]:
    """Default configuration as it appears in a config file."""
    return PipelineConfig().model_dump(by_alias=True, mode="json")


def effective_config_json(config: PipelineConfig) -> str:
    """Render the effective config saved beside command outputs."""
    return json.dumps(config.model_dump(by_alias=True, mode="json"), indent=2, sort_keys=True)
