"""Strict JSON run manifests.

Schema (keys named ``comment`` are accepted and ignored at any level)::

    {
      "name": str,                          optional
      "system": {"true_weights": [float], "noise_variance": float},
      "input": {"pole": float, "innovation_variance": float},
      "initial_weights": float | [float],   scalar is broadcast to all taps
      "iterations": int,                    default 30000
      "runs": int,                          default 100
      "base_seed": int,                     default 0
      "steady_window_fraction": float,      default 0.2
      "divergence_bound": float,            default 10 * (1 + max |weight|)
      "mean_weights": "nnls" | "empirical", default "nnls"
      "tolerance_db": float,                default 1.0
      "outputs": str,                       default "nnlms-lab-out"
      "emit": ["trajectory-csv", "report-json"],
      "algorithms": [
        {"name": str, "kind": str, "step_size": float,
         "regularizer": float,              NormalizedNNLMS only, default 0
         "exponent": float,                 required for ExponentialNNLMS
         "iterations": int, "runs": int,    per-entry overrides
         "initial_weights": ..., "steady_window_fraction": float}
      ]
    }
"""

import json
import json.scanner
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, NNLMSLabError
from .filters import Algorithm, AlgorithmKind
from .montecarlo import DEFAULT_ITERATIONS, DEFAULT_WINDOW_FRACTION, ExperimentConfig
from .signal import Ar1Process, SystemModel

EMIT_CHOICES = ("trajectory-csv", "report-json")
MEAN_WEIGHT_CHOICES = ("nnls", "empirical")

_TOP_KEYS = {
    "name", "system", "input", "initial_weights", "iterations", "runs", "base_seed",
    "steady_window_fraction", "divergence_bound", "mean_weights", "tolerance_db", "outputs", "emit",
    "algorithms",
}
_SYSTEM_KEYS = {"true_weights", "noise_variance"}
_INPUT_KEYS = {"pole", "innovation_variance"}
_ALG_KEYS = {
    "name", "kind", "step_size", "regularizer", "exponent", "iterations", "runs",
    "initial_weights", "steady_window_fraction",
}
_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class _Node(dict):
    start = 0


class _TrackingDecoder(json.JSONDecoder):
    """Decoder whose objects remember the offset at which they start."""

    def __init__(self):
        super().__init__()
        plain = self.parse_object

        def parse_object(s_and_end, *args):
            start = s_and_end[1]
            obj, end = plain(s_and_end, *args)
            node = _Node(obj)
            node.start = start
            return node, end

        self.parse_object = parse_object
        self.scan_once = json.scanner.py_make_scanner(self)


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    config: ExperimentConfig


@dataclass(frozen=True)
class RunManifest:
    entries: tuple
    outputs: Path
    emit: frozenset = field(default_factory=lambda: frozenset(EMIT_CHOICES))
    mean_weights: str = "nnls"
    tolerance_db: float = 1.0
    name: str = "manifest"


class _Ctx:
    def __init__(self, text):
        self.text = text

    def line(self, node, key=None):
        pos = getattr(node, "start", None)
        if pos is None:
            return None
        if key is not None:
            hit = self.text.find(f'"{key}"', pos)
            if hit >= 0:
                pos = hit
        return self.text.count("\n", 0, pos) + 1

    def fail(self, message, node, key, path):
        raise ConfigError(message, key=path, line=self.line(node, key))


def _require_object(ctx, node, path, parent=None, key=None):
    if not isinstance(node, dict):
        ctx.fail("expected a JSON object", parent if parent is not None else node, key, path)
    return node


def _check_keys(ctx, node, allowed, required, path):
    for key in node:
        if key != "comment" and key not in allowed:
            ctx.fail("unknown key", node, key, f"{path}.{key}" if path else key)
    for key in required:
        if key not in node:
            ctx.fail("missing required key", node, None, f"{path}.{key}" if path else key)


def _number(ctx, node, key, path, integer=False):
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx.fail("expected a number", node, key, path)
    if integer:
        if isinstance(value, float) and not value.is_integer():
            ctx.fail("expected an integer", node, key, path)
        return int(value)
    return float(value)


def _weights(ctx, node, key, path):
    value = node[key]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, list) or not value:
        ctx.fail("expected a number or a non-empty list of numbers", node, key, path)
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            ctx.fail("expected a list of numbers", node, key, path)
    return [float(v) for v in value]


def _build(ctx, root, path):
    root = _require_object(ctx, root, "<root>")
    _check_keys(ctx, root, _TOP_KEYS, ("system", "input", "initial_weights", "algorithms"), "")

    system_node = _require_object(ctx, root["system"], "system", root, "system")
    _check_keys(ctx, system_node, _SYSTEM_KEYS, _SYSTEM_KEYS, "system")
    input_node = _require_object(ctx, root["input"], "input", root, "input")
    _check_keys(ctx, input_node, _INPUT_KEYS, _INPUT_KEYS, "input")

    def guarded(fn, node, key, keypath):
        try:
            return fn()
        except ConfigError:
            raise
        except NNLMSLabError as exc:
            ctx.fail(str(exc), node, key, keypath)

    true_w = _weights(ctx, system_node, "true_weights", "system.true_weights")
    if not isinstance(true_w, list):
        ctx.fail("expected a list of numbers", system_node, "true_weights", "system.true_weights")
    system = guarded(
        lambda: SystemModel(true_w, _number(ctx, system_node, "noise_variance", "system.noise_variance")),
        system_node, "noise_variance", "system.noise_variance",
    )
    pole = _number(ctx, input_node, "pole", "input.pole")
    ivar = _number(ctx, input_node, "innovation_variance", "input.innovation_variance")
    process = guarded(lambda: Ar1Process(pole, ivar), input_node, "pole", "input")

    defaults = {
        "initial_weights": _weights(ctx, root, "initial_weights", "initial_weights"),
        "iterations": _number(ctx, root, "iterations", "iterations", integer=True) if "iterations" in root else DEFAULT_ITERATIONS,
        "runs": _number(ctx, root, "runs", "runs", integer=True) if "runs" in root else 100,
        "steady_window_fraction": (
            _number(ctx, root, "steady_window_fraction", "steady_window_fraction")
            if "steady_window_fraction" in root else DEFAULT_WINDOW_FRACTION
        ),
        "divergence_bound": (
            _number(ctx, root, "divergence_bound", "divergence_bound") if "divergence_bound" in root else None
        ),
    }
    base_seed = _number(ctx, root, "base_seed", "base_seed", integer=True) if "base_seed" in root else 0

    mean_weights = root.get("mean_weights", "nnls")
    if mean_weights not in MEAN_WEIGHT_CHOICES:
        ctx.fail(f"expected one of {', '.join(MEAN_WEIGHT_CHOICES)}", root, "mean_weights", "mean_weights")
    tolerance = _number(ctx, root, "tolerance_db", "tolerance_db") if "tolerance_db" in root else 1.0
    if not tolerance > 0:
        ctx.fail("tolerance must be > 0", root, "tolerance_db", "tolerance_db")
    emit = root.get("emit", list(EMIT_CHOICES))
    if not isinstance(emit, list) or any(e not in EMIT_CHOICES for e in emit):
        ctx.fail(f"expected a list drawn from {', '.join(EMIT_CHOICES)}", root, "emit", "emit")
    outputs = root.get("outputs", "nnlms-lab-out")
    if not isinstance(outputs, str) or not outputs:
        ctx.fail("expected a directory path", root, "outputs", "outputs")
    name = root.get("name", Path(path).stem if path else "manifest")
    if not isinstance(name, str):
        ctx.fail("expected a string", root, "name", "name")

    algs = root["algorithms"]
    if not isinstance(algs, list) or not algs:
        ctx.fail("expected a non-empty list of algorithm entries", root, "algorithms", "algorithms")
    entries = []
    seen = set()
    for i, node in enumerate(algs):
        where = f"algorithms[{i}]"
        node = _require_object(ctx, node, where, root, "algorithms")
        required = ["name", "kind", "step_size"]
        if node.get("kind") == AlgorithmKind.EXPONENTIAL.value:
            required.append("exponent")
        _check_keys(ctx, node, _ALG_KEYS, required, where)
        entry_name = node["name"]
        if not isinstance(entry_name, str) or not _NAME_RE.match(entry_name):
            ctx.fail("name must be a plain file-name token", node, "name", f"{where}.name")
        if entry_name in seen:
            ctx.fail("duplicate algorithm name", node, "name", f"{where}.name")
        seen.add(entry_name)
        if node["kind"] not in {k.value for k in AlgorithmKind}:
            ctx.fail(
                f"unknown kind; expected one of {', '.join(k.value for k in AlgorithmKind)}",
                node, "kind", f"{where}.kind",
            )
        if "exponent" in node and node["kind"] != AlgorithmKind.EXPONENTIAL.value:
            ctx.fail("exponent only applies to ExponentialNNLMS", node, "exponent", f"{where}.exponent")
        if "regularizer" in node and node["kind"] != AlgorithmKind.NORMALIZED.value:
            ctx.fail("regularizer only applies to NormalizedNNLMS", node, "regularizer", f"{where}.regularizer")
        params = {"step_size": _number(ctx, node, "step_size", f"{where}.step_size")}
        for key in ("regularizer", "exponent"):
            if key in node:
                params[key] = _number(ctx, node, key, f"{where}.{key}")
        algorithm = guarded(lambda: Algorithm(node["kind"], **params), node, "step_size", where)

        settings = dict(defaults)
        for key in ("iterations", "runs"):
            if key in node:
                settings[key] = _number(ctx, node, key, f"{where}.{key}", integer=True)
        if "steady_window_fraction" in node:
            settings["steady_window_fraction"] = _number(
                ctx, node, "steady_window_fraction", f"{where}.steady_window_fraction"
            )
        if "initial_weights" in node:
            settings["initial_weights"] = _weights(ctx, node, "initial_weights", f"{where}.initial_weights")
        config = guarded(
            lambda: ExperimentConfig(
                system=system, process=process, algorithm=algorithm, base_seed=base_seed, **settings
            ),
            node, None, where,
        )
        entries.append(ManifestEntry(entry_name, config))

    return RunManifest(
        entries=tuple(entries),
        outputs=Path(outputs),
        emit=frozenset(emit),
        mean_weights=mean_weights,
        tolerance_db=tolerance,
        name=name,
    )


def parse_text(text, path=None):
    """Parse manifest JSON text; ``path`` only names the source in messages."""
    if not text.strip():
        raise ConfigError(f"manifest {path or ''} is empty".replace("  ", " "), line=1)
    try:
        root = _TrackingDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return _build(_Ctx(text), root, path)


def parse_config(path):
    """Read and validate a manifest file.

    Raises
    ------
    ConfigError
        On unreadable files, malformed JSON, unknown or missing keys and
        invalid values. The error names the offending key and line.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    return parse_text(text, str(path))


def bundled_manifest(name="paper-fig1.json"):
    """Path of a manifest shipped inside the package."""
    return Path(__file__).with_name("data") / name
