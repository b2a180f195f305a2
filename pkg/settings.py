#!/usr/bin/env python3
# -*- coding: utf-8
"""
Configuration for Strikebench
Built-in defaults, .env.local / STRIKEBENCH_* environment overrides and JSON
config files, resolved as: flag > config file > environment > default
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional
from dotenv import load_dotenv

from errors import ConfigError

# Load environment variables
load_dotenv('.env.local')

TOOL_VERSION = "1.0.0"

DEFAULTS: Dict[str, Any] = {
    # rule mining
    'tau': 0.01,
    'min_body_support': 2,
    'sample_cap': None,
    'seed': 42,
    # strikingness
    'window': None,  # None = full history
    'lambda': 0.1,
    'alpha': (0.4, 0.4, 0.2),
    'history_scope': 'all-before-t',
    'temp_lambda': 0.005,
    'measure': 'rsmf',
    # evaluation
    'b': 0.1,
    'tie_policy': 'realistic',
    'group_width': 0.1,
    # ensemble
    'grid_step': 0.1,
    'normalization': 'minmax',
    'metric': 'mrr',
    # recurrency
    'grid_xi': (0.5, 0.7, 0.9, 0.95, 0.99),
    'grid_kappa': (0.0, 0.25, 0.5, 0.75, 1.0),
    # dataset
    'time_divisor': 'auto',
    'split': 'test',
    'jobs': None,
}

# keys that can be overridden through STRIKEBENCH_<KEY> environment variables
ENV_KEYS = ('tau', 'min_body_support', 'seed', 'window', 'lambda', 'alpha', 'history_scope',
            'b', 'tie_policy', 'group_width', 'grid_step', 'normalization', 'jobs', 'time_divisor')


def data_dir() -> Optional[Path]:
    """Dataset root fallback from STRIKEBENCH_DATA_DIR"""
    value = os.getenv('STRIKEBENCH_DATA_DIR')
    return Path(value) if value else None


def resolve_dataset_path(path: str) -> Path:
    """Resolve a dataset directory, falling back to STRIKEBENCH_DATA_DIR for relative paths"""
    candidate = Path(path)
    if candidate.exists() or candidate.is_absolute():
        return candidate
    root = data_dir()
    if root is not None and (root / candidate).exists():
        return root / candidate
    return candidate


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Read a JSON config file; keys use the underscore form of the CLI flags"""
    if not path:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("config file " + str(path) + " is not valid JSON: " + str(e))
    if not isinstance(data, dict):
        raise ConfigError("config file " + str(path) + " must hold a JSON object")
    return {key.replace('-', '_'): value for key, value in data.items()}


def _env_overrides() -> Dict[str, Any]:
    overrides = {}
    for key in ENV_KEYS:
        value = os.getenv('STRIKEBENCH_' + key.upper())
        if value is not None and value != '':
            overrides[key] = value
    return overrides


def resolve(flags: Mapping[str, Any], config: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Merge one subcommand's settings; flags left as None fall through"""
    resolved = dict(DEFAULTS)
    resolved.update(_env_overrides())
    if config:
        resolved.update(config)
    for key, value in flags.items():
        if value is not None:
            resolved[key] = value
        elif key not in resolved:
            resolved[key] = None
    return resolved


def parse_window(value: Any) -> Optional[int]:
    """'full' / None means the whole history, otherwise a positive step count"""
    if value is None:
        return None
    if isinstance(value, str) and value.strip().lower() in ('full', 'all', ''):
        return None
    try:
        window = int(value)
    except (TypeError, ValueError):
        raise ConfigError("window must be 'full' or a positive integer, got " + repr(value))
    if window < 1:
        raise ConfigError("window must be >= 1, got " + str(window))
    return window


def parse_alpha(value: Any):
    """Accept '0.4,0.4,0.2' or a 3-sequence"""
    if isinstance(value, str):
        parts = [p for p in value.split(',') if p.strip()]
    else:
        parts = list(value)
    try:
        alpha = tuple(float(p) for p in parts)
    except (TypeError, ValueError):
        raise ConfigError("alpha must be three comma-separated reals, got " + repr(value))
    if len(alpha) != 3:
        raise ConfigError("alpha needs exactly three weights (subject, object, relation)")
    return alpha


def parse_float_list(value: Any):
    if isinstance(value, str):
        value = [p for p in value.replace(',', ' ').split()]
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError("expected a list of numbers, got " + repr(value))


def default_jobs() -> int:
    return os.cpu_count() or 1
