"""
Run configuration loading, validation and output writing
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from modules.group_core import (FiniteSubset, FolnerSchedule, as_element, box_schedule, geometric_schedule,
                                interval_schedule)
from modules.representation import KoopmanRepresentation, Representation, representation_from_dict
from modules.setmaps import DEFAULT_EPSILONS, SetMap, TargetSet, setmap_from_dict, subset_from_json, \
    target_set_from_dict
from modules.subshift import Potential, Subshift, full_shift, nearest_neighbor
from utils.errors import ConfigurationError
from utils.settings import get_settings

logger = logging.getLogger(__name__)

COMMANDS = ('folner', 'analyze', 'realize', 'pressure', 'varprin')
SCHEMA_VERSION = 1
FLOAT_FORMAT = '%.17g'
SCHEDULE_TYPES = ('boxes', 'intervals', 'geometric')
FAMILIES = ('bernoulli', 'markov')


@dataclass
class RunConfig:
    """A validated run configuration with every block built"""

    command: str
    dimension: int
    schedule: FolnerSchedule
    rep: Optional[Representation] = None
    subshift: Optional[Subshift] = None
    setmap: Optional[SetMap] = None
    potential: Optional[Potential] = None
    target: Optional[TargetSet] = None
    window: Optional[FiniteSubset] = None
    generators: List[Tuple[int, ...]] = field(default_factory=list)
    eps_schedule: Tuple[float, ...] = DEFAULT_EPSILONS
    tol: float = 1e-3
    seed: int = 0
    family: str = 'bernoulli'
    restarts: int = 20
    grid_step: float = 1e-4
    samples: int = 32
    pattern_cap: Optional[int] = None
    max_iter: Optional[int] = None
    source: Optional[str] = None


def load_config_file(path: str) -> Tuple[bool, str, Optional[Dict[str, Any]]]:
    """
    Read a JSON run configuration

    Args:
        path: path to the JSON document

    Returns:
        Tuple of (is_valid, message, data)
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except FileNotFoundError:
        return False, f"Config file not found: {path}", None
    except OSError as e:
        return False, f"Could not read config file {path}: {e}", None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        return False, f"Invalid JSON in {path}: line {e.lineno}, column {e.colno}: {e.msg}", None
    if not isinstance(data, dict):
        return False, "Config must be a JSON object", None
    return True, f"Loaded config with blocks {sorted(data)}", data


def _resolve_block(config: Dict[str, Any], key: str, base_dir: Path, errors: List[str]) -> Optional[Any]:
    """A block may be given inline or as a path to a JSON file next to the config"""
    value = config.get(key)
    if not isinstance(value, str):
        return value
    path = (base_dir / value) if not Path(value).is_absolute() else Path(value)
    is_valid, message, data = load_config_file(str(path))
    if not is_valid:
        errors.append(f"'{key}': {message}")
        return None
    return data


def _positive(value: Any, name: str, errors: List[str], integer: bool = False) -> None:
    kind = int if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kind) or not value > 0 or \
            (not integer and not math.isfinite(value)):
        errors.append(f"'{name}' must be a positive {'integer' if integer else 'number'}, got {value!r}")


def validate_config(config: Mapping[str, Any], command: str) -> List[str]:
    """
    Structural checks on a run configuration

    Args:
        config: the parsed JSON document (file references already resolved)
        command: one of COMMANDS

    Returns:
        List of error messages (empty if valid)
    """
    errors = []
    if command not in COMMANDS:
        errors.append(f"Unknown command '{command}', expected one of {list(COMMANDS)}")
        return errors

    group = config.get('group', {'type': 'Zd', 'd': 1})
    dimension = None
    if not isinstance(group, Mapping):
        errors.append("'group' must be an object")
    elif group.get('type', 'Zd') != 'Zd':
        errors.append(f"Unsupported group type '{group.get('type')}', only 'Zd' is available")
    elif group.get('d', 1) not in (1, 2):
        errors.append(f"Group dimension 'd' must be 1 or 2, got {group.get('d')!r}")
    else:
        dimension = group.get('d', 1)

    folner = config.get('folner')
    if folner is None:
        errors.append("Missing 'folner' block")
    elif not isinstance(folner, Mapping):
        errors.append("'folner' must be an object")
    else:
        kind = folner.get('type', 'boxes')
        if kind not in SCHEDULE_TYPES:
            errors.append(f"Unknown Følner schedule type '{kind}', expected one of {list(SCHEDULE_TYPES)}")
        elif kind == 'geometric':
            exponents = folner.get('exponents')
            if not isinstance(exponents, list) or len(exponents) < 3 or \
                    not all(isinstance(e, int) and e >= 0 for e in exponents):
                errors.append("Geometric schedules need at least 3 non-negative integer 'exponents'")
            elif exponents != sorted(set(exponents)):
                errors.append("Geometric 'exponents' must be strictly increasing")
        else:
            n_min, n_max = folner.get('n_min'), folner.get('n_max')
            for name, value in (('n_min', n_min), ('n_max', n_max)):
                if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value < 0):
                    errors.append(f"'folner.{name}' must be a non-negative integer, got {value!r}")
            if isinstance(n_min, int) and isinstance(n_max, int) and n_max < n_min:
                errors.append(f"Følner range is empty: n_min={n_min} > n_max={n_max}")
            if kind == 'intervals' and (n_min is None or n_max is None):
                errors.append("Interval schedules need 'n_min' and 'n_max'")
            if kind == 'intervals' and isinstance(n_min, int) and n_min < 1:
                errors.append("Interval schedules start at n_min >= 1")
            if 'step' in folner:
                _positive(folner['step'], 'folner.step', errors, integer=True)

    has_rep, has_subshift = config.get('rep') is not None, config.get('subshift') is not None
    has_setmap, has_potential = config.get('setmap') is not None, config.get('potential') is not None
    if command in ('analyze', 'realize'):
        if has_rep == has_subshift:
            errors.append("Exactly one of 'rep' and 'subshift' must be given")
        if not has_setmap:
            errors.append("Missing 'setmap' block")
    if command in ('pressure', 'varprin'):
        if not has_subshift:
            errors.append("Missing 'subshift' block")
        if has_rep:
            errors.append("'rep' is implied by the subshift (Koopman representation) and must be omitted")
        if has_setmap == has_potential:
            errors.append("Exactly one of 'setmap' and 'potential' must be given")

    subshift = config.get('subshift')
    if isinstance(subshift, Mapping) and dimension is not None and subshift.get('dimension', 1) != dimension:
        errors.append(f"Subshift dimension {subshift.get('dimension', 1)} differs from group dimension {dimension}")
    rep = config.get('rep')
    if isinstance(rep, Mapping) and dimension is not None and rep.get('dimension', 1) != dimension \
            and rep.get('type', 'matrix') != 'matrix':
        errors.append(f"Representation dimension {rep.get('dimension', 1)} differs from group dimension {dimension}")

    options = config.get('options', {})
    if not isinstance(options, Mapping):
        errors.append("'options' must be an object")
        return errors
    if 'tol' in options:
        _positive(options['tol'], 'options.tol', errors)
    if 'seed' in options and (isinstance(options['seed'], bool) or not isinstance(options['seed'], int)):
        errors.append(f"'options.seed' must be an integer, got {options['seed']!r}")
    for name in ('restarts', 'samples', 'pattern_cap', 'max_iter'):
        if name in options:
            _positive(options[name], f'options.{name}', errors, integer=True)
    if 'grid_step' in options:
        _positive(options['grid_step'], 'options.grid_step', errors)
        if isinstance(options['grid_step'], (int, float)) and options['grid_step'] > 0.5:
            errors.append("'options.grid_step' must be at most 0.5")
    if 'eps_schedule' in options:
        eps = options['eps_schedule']
        if not isinstance(eps, list) or not eps:
            errors.append("'options.eps_schedule' must be a non-empty list")
        else:
            for i, value in enumerate(eps):
                _positive(value, f'options.eps_schedule[{i}]', errors)
    if 'family' in options and options['family'] not in FAMILIES:
        errors.append(f"Unknown measure family '{options['family']}', expected one of {list(FAMILIES)}")
    if 'generators' in options:
        generators = options['generators']
        if not isinstance(generators, list) or not generators:
            errors.append("'options.generators' must be a non-empty list of group elements")
    if 'target' in options and command != 'realize':
        logger.info("'options.target' is only used by the realize command")
    return errors


def _build_schedule(block: Mapping[str, Any], dimension: int) -> FolnerSchedule:
    kind = block.get('type', 'boxes')
    if kind == 'geometric':
        return geometric_schedule(block['exponents'], int(block.get('base', 2)), dimension)
    if kind == 'intervals':
        return interval_schedule(block['n_min'], block['n_max'], int(block.get('step', 1)), dimension)
    return box_schedule(dimension, block.get('n_min'), block.get('n_max'), int(block.get('step', 1)))


def build_subshift(block: Mapping[str, Any]) -> Subshift:
    """Subshift from {"alphabet": [...], "dimension": d, "constraints": {"type": "full" | "nn", ...}}"""
    alphabet = block.get('alphabet')
    if not isinstance(alphabet, list) or not alphabet:
        raise ConfigurationError("Subshift needs a non-empty 'alphabet' list")
    alphabet = [str(a) for a in alphabet]
    dimension = int(block.get('dimension', 1))
    constraints = block.get('constraints', {'type': 'full'})
    kind = constraints.get('type', 'full')
    if kind == 'full':
        return full_shift(alphabet, dimension)
    if kind == 'nn':
        allowed = constraints.get('allowed')
        if allowed is None:
            raise ConfigurationError("Nearest-neighbour constraints need an 'allowed' matrix")
        return nearest_neighbor(alphabet, allowed, dimension)
    raise ConfigurationError(f"Unknown constraint type '{kind}', expected 'full' or 'nn'")


def build_run_config(config: Mapping[str, Any], command: str, overrides: Optional[Mapping[str, Any]] = None,
                     base_dir: Optional[Path] = None) -> Tuple[bool, str, Optional[RunConfig]]:
    """
    Validate a configuration and build every block it describes

    CLI overrides (seed, tol) take precedence over the options block, which takes
    precedence over the environment defaults.

    Args:
        config: parsed JSON document
        command: one of COMMANDS
        overrides: values from the command line (None entries are ignored)
        base_dir: directory used to resolve block file references

    Returns:
        Tuple of (is_valid, message, run_config)
    """
    base_dir = base_dir or Path('.')
    errors = []
    config = dict(config)
    for key in ('rep', 'subshift', 'setmap', 'potential'):
        config[key] = _resolve_block(config, key, base_dir, errors)
    errors.extend(validate_config(config, command))
    if errors:
        return False, 'Invalid configuration:\n  - ' + '\n  - '.join(errors), None

    settings, _ = get_settings()
    options = dict(config.get('options', {}))
    for key, value in (overrides or {}).items():
        if value is not None:
            options[key] = value

    dimension = int(config.get('group', {}).get('d', 1))
    run = RunConfig(command=command, dimension=dimension,
                    schedule=_build_schedule(config['folner'], dimension),
                    tol=float(options.get('tol', 1e-3)),
                    seed=int(options.get('seed', settings['seed'])),
                    family=options.get('family', 'bernoulli'),
                    restarts=int(options.get('restarts', 20)),
                    grid_step=float(options.get('grid_step', 1e-4)),
                    samples=int(options.get('samples', 32)),
                    pattern_cap=options.get('pattern_cap'),
                    max_iter=options.get('max_iter'))

    def attempt(label: str, build):
        try:
            return build()
        except ConfigurationError as e:
            errors.append(f"'{label}': {e}")
        except (KeyError, TypeError, ValueError) as e:
            errors.append(f"'{label}': malformed block ({e})")
        return None

    if 'generators' in options:
        run.generators = attempt('options.generators',
                                 lambda: [as_element(g, dimension) for g in options['generators']]) or []
    else:
        run.generators = [tuple(1 if i == axis else 0 for i in range(dimension)) for axis in range(dimension)]
    if 'eps_schedule' in options:
        run.eps_schedule = tuple(float(e) for e in options['eps_schedule'])
    if 'window' in options:
        run.window = attempt('options.window', lambda: subset_from_json(options['window'], dimension))
    if 'target' in options:
        run.target = attempt('options.target', lambda: target_set_from_dict(options['target']))

    if config.get('subshift') is not None:
        run.subshift = attempt('subshift', lambda: build_subshift(config['subshift']))
        if run.subshift is not None:
            run.rep = KoopmanRepresentation(run.subshift)
    elif config.get('rep') is not None:
        rep_block = dict(config['rep'])
        rep_block.setdefault('dimension', dimension)
        run.rep = attempt('rep', lambda: representation_from_dict(rep_block))
        if run.rep is not None and run.rep.dimension != dimension:
            errors.append(f"'rep': acts on Z^{run.rep.dimension}, group is Z^{dimension}")

    if config.get('setmap') is not None and run.rep is not None:
        run.setmap = attempt('setmap', lambda: setmap_from_dict(config['setmap'], run.rep))
    if run.target is not None and run.rep is not None and not run.rep.is_finite_dimensional:
        errors.append("'options.target': target sets are supported for matrix representations only")
    if config.get('potential') is not None and run.subshift is not None:
        run.potential = attempt('potential', lambda: Potential.from_dict(config['potential'], run.subshift))

    if errors:
        return False, 'Invalid configuration:\n  - ' + '\n  - '.join(errors), None
    return True, f"Configuration for '{command}' is valid", run


def load_run_config(path: str, command: str,
                    overrides: Optional[Mapping[str, Any]] = None) -> Tuple[bool, str, Optional[RunConfig]]:
    """Read, validate and build a run configuration from a file"""
    is_valid, message, data = load_config_file(path)
    if not is_valid:
        return False, message, None
    is_valid, message, run = build_run_config(data, command, overrides, Path(path).resolve().parent)
    if run is not None:
        run.source = str(path)
    return is_valid, message, run


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, tuples and non-finite floats into plain JSON values"""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_json(payload: Mapping[str, Any]) -> str:
    """UTF-8 JSON with stable key order and the schema version"""
    document = dict(payload)
    document['schema'] = SCHEMA_VERSION
    return json.dumps(to_jsonable(document), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + '\n'


def format_csv(frame: pd.DataFrame) -> str:
    """Comma-separated, header row, '.' decimals, round-trip float precision"""
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def write_outputs(out_dir: str, command: str, payload: Mapping[str, Any],
                  tables: Mapping[str, pd.DataFrame]) -> List[Path]:
    """
    Write <command>.json and one <command>_<table>.csv per table

    Every document is rendered before the first file is written.

    Returns:
        Paths written, in a stable order
    """
    rendered = [(f'{command}.json', format_json(payload))]
    for name in sorted(tables):
        rendered.append((f'{command}_{name}.csv', format_csv(tables[name])))

    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for filename, text in rendered:
        target = directory / filename
        target.write_text(text, encoding='utf-8')
        written.append(target)
    logger.info("Wrote %d files to %s", len(written), directory)
    return written
