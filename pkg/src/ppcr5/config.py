"""Flat key-value scenario files.

Grammar: one ``key = value`` per line, ``#`` starts a comment, blank
lines ignored.  Dotted keys address repeated structures, e.g.
``sensor.1.x`` or ``waypoint.2.vx`` (indices are 1-based and contiguous).
Unknown keys and malformed values are reported by name.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .distributed import FusionRule
from .filtering import MotionModel, Sensor, StateVector4
from .scenario import InitSpec, ScenarioConfig, TrajectorySpec


class ConfigError(ValueError):
    """A scenario file failed to parse or validate."""


_SCALAR_KEYS = {
    "fusion",
    "seed",
    "runs",
    "particles",
    "steps",
    "divergence_threshold",
    "feedback",
    "truth_noisy",
    "motion.dt",
    "motion.q_vel",
    "motion.q_pos",
    "trajectory.kind",
    "trajectory.start.x",
    "trajectory.start.y",
    "trajectory.start.vx",
    "trajectory.start.vy",
    "init.spread.x",
    "init.spread.y",
    "init.spread.vx",
    "init.spread.vy",
}
_SENSOR_FIELDS = {"x", "y", "sigma_bearing"}
_WAYPOINT_FIELDS = {"step", "vx", "vy"}
_INIT_FIELDS = {"x", "y", "vx", "vy"}


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    """Raw key -> value mapping, with duplicate keys rejected."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _validate_keys(kv: dict[str, str], source: str) -> None:
    for key in kv:
        parts = key.split(".")
        if key in _SCALAR_KEYS:
            continue
        if (
            len(parts) == 3
            and parts[0] in ("sensor", "waypoint", "init")
            and parts[1].isdigit()
            and int(parts[1]) >= 1
        ):
            allowed = {
                "sensor": _SENSOR_FIELDS,
                "waypoint": _WAYPOINT_FIELDS,
                "init": _INIT_FIELDS,
            }[parts[0]]
            if parts[2] in allowed:
                continue
        raise ConfigError(f"{source}: unknown key {key!r}")


def _take(kv: dict[str, str], key: str, convert, default=None, required: bool = False):
    if key not in kv:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    raw = kv[key]
    try:
        return convert(raw)
    except (ValueError, TypeError):
        raise ConfigError(f"key {key!r} has invalid value {raw!r}") from None


def _to_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(raw)


def _indexed(kv: dict[str, str], prefix: str, fields: set[str], source: str) -> list[dict[str, str]]:
    """Collect sensor.<i>.<field> style groups as a contiguous 1-based list."""
    groups: dict[int, dict[str, str]] = {}
    for key, value in kv.items():
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == prefix and parts[1].isdigit():
            groups.setdefault(int(parts[1]), {})[parts[2]] = value
    if not groups:
        return []
    indices = sorted(groups)
    if indices != list(range(1, len(indices) + 1)):
        raise ConfigError(f"{source}: {prefix} indices must be 1..{len(indices)} contiguous, got {indices}")
    for i in indices:
        missing = fields - set(groups[i])
        if missing:
            raise ConfigError(f"{source}: {prefix}.{i} is missing key(s) {sorted(missing)}")
    return [groups[i] for i in indices]


def build_scenario(kv: dict[str, str], source: str = "<string>") -> ScenarioConfig:
    """Validate a raw mapping and assemble the scenario it describes."""
    _validate_keys(kv, source)

    sensor_rows = _indexed(kv, "sensor", _SENSOR_FIELDS, source)
    if not sensor_rows:
        raise ConfigError(f"{source}: at least one sensor.<i>.* block is required")
    sensors = tuple(
        Sensor(pos_x=float(r["x"]), pos_y=float(r["y"]), sigma_bearing=float(r["sigma_bearing"]))
        for r in sensor_rows
    )

    kind = _take(kv, "trajectory.kind", str, required=True)
    start = StateVector4(
        _take(kv, "trajectory.start.x", float, required=True),
        _take(kv, "trajectory.start.y", float, required=True),
        _take(kv, "trajectory.start.vx", float, required=True),
        _take(kv, "trajectory.start.vy", float, required=True),
    )
    waypoints = tuple(
        (int(r["step"]), float(r["vx"]), float(r["vy"]))
        for r in _indexed(kv, "waypoint", _WAYPOINT_FIELDS, source)
    )
    steps = _take(kv, "steps", int, required=True)

    init_rows = _indexed(kv, "init", _INIT_FIELDS, source)
    if len(init_rows) != len(sensors):
        raise ConfigError(
            f"{source}: need one init.<i>.* block per sensor "
            f"({len(sensors)} sensors, {len(init_rows)} init blocks)"
        )
    centers = tuple(
        StateVector4(float(r["x"]), float(r["y"]), float(r["vx"]), float(r["vy"]))
        for r in init_rows
    )
    spread = (
        _take(kv, "init.spread.x", float, default=5.0),
        _take(kv, "init.spread.y", float, default=5.0),
        _take(kv, "init.spread.vx", float, default=0.5),
        _take(kv, "init.spread.vy", float, default=0.5),
    )

    fusion_name = _take(kv, "fusion", str, default="whitened")
    try:
        fusion = FusionRule.from_name(fusion_name)
    except ValueError as exc:
        raise ConfigError(f"key 'fusion': {exc}") from None

    try:
        return ScenarioConfig(
            sensors=sensors,
            trajectory=TrajectorySpec(kind=kind, start=start, steps=steps, waypoints=waypoints),
            init=InitSpec(centers=centers, spread=spread),
            particles=_take(kv, "particles", int, default=200),
            fusion=fusion,
            seed=_take(kv, "seed", int, default=0),
            runs=_take(kv, "runs", int, default=1),
            divergence_threshold=_take(kv, "divergence_threshold", float, default=30.0),
            motion=MotionModel(
                dt=_take(kv, "motion.dt", float, default=1.0),
                q_vel=_take(kv, "motion.q_vel", float, default=0.1),
                q_pos=_take(kv, "motion.q_pos", float, default=0.3),
            ),
            truth_noisy=_take(kv, "truth_noisy", _to_bool, default=False),
            feedback_enabled=_take(kv, "feedback", _to_bool, default=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def bundled_scenario_names() -> list[str]:
    base = resources.files("ppcr5") / "scenarios"
    return sorted(p.name for p in base.iterdir() if p.name.endswith(".cfg"))


def resolve_scenario_path(name_or_path: str) -> tuple[str, str]:
    """Scenario text and display name, from a path or a bundled file name."""
    path = Path(name_or_path)
    if path.exists():
        try:
            return path.read_text(), str(path)
        except OSError as exc:
            raise ConfigError(f"cannot read scenario file {name_or_path!r}: {exc}") from None
    bundled = resources.files("ppcr5") / "scenarios" / name_or_path
    if bundled.is_file():
        return bundled.read_text(), name_or_path
    raise ConfigError(
        f"scenario {name_or_path!r} is neither a file nor a bundled scenario "
        f"(bundled: {', '.join(bundled_scenario_names())})"
    )


def load_scenario(name_or_path: str, overrides: dict | None = None) -> ScenarioConfig:
    """Parse a scenario file and apply CLI-style overrides.

    Recognized overrides: fusion, runs, seed, particles, steps.
    """
    text, source = resolve_scenario_path(name_or_path)
    kv = parse_kv(text, source)
    config = build_scenario(kv, source)
    if not overrides:
        return config
    changes = {}
    if overrides.get("fusion") is not None:
        changes["fusion"] = FusionRule.from_name(overrides["fusion"])
    for field_name in ("runs", "seed", "particles"):
        if overrides.get(field_name) is not None:
            changes[field_name] = int(overrides[field_name])
    if overrides.get("steps") is not None:
        traj = config.trajectory
        changes["trajectory"] = TrajectorySpec(
            kind=traj.kind, start=traj.start, steps=int(overrides["steps"]), waypoints=traj.waypoints
        )
    from dataclasses import replace

    try:
        return replace(config, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
