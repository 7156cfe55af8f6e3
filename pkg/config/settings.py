"""
Process settings and config-file layering
Flags override config-file values which override model defaults
"""
import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from errors import ConfigurationError

load_dotenv()


class Settings(BaseModel):
    """Environment-derived settings"""

    log_level: str = Field(default="INFO")
    threads: int = Field(default=1, ge=1)
    output_root: str = Field(default="runs")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings(
        log_level=os.getenv("MFPNET_LOG", "INFO"),
        threads=int(os.getenv("MFPNET_THREADS", "1")),
        output_root=os.getenv("MFPNET_OUT", "runs"),
    )


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Read a JSON config file; a missing path means no file-level overrides"""
    if not path:
        return {}
    config_path = Path(path)
    try:
        raw = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Config file not readable: {config_path}") from e
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file is not valid JSON: {config_path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file must hold a JSON object: {config_path}")
    return data


def merge_layers(*layers: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Deep-merge dictionaries left to right; later layers win.
    None values at any depth mean "not given" and never override;
    sections left empty after dropping them are omitted.
    """
    merged: Dict[str, Any] = {}
    for layer in layers:
        if not layer:
            continue
        for key, value in layer.items():
            if value is None:
                continue
            if isinstance(value, dict):
                base = merged.get(key)
                section = merge_layers(base if isinstance(base, dict) else {}, value)
                if section:
                    merged[key] = section
            else:
                merged[key] = value
    return merged


def write_resolved_config(out_dir: Path, resolved: Dict[str, Any]) -> Path:
    """Persist the resolved configuration next to a command's outputs"""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "resolved_config.json"
    path.write_text(json.dumps(resolved, indent=2, sort_keys=True, default=str), encoding="utf-8")
    return path
