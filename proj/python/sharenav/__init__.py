"""Python bindings for the sharenav simulator core."""
import json
from pathlib import Path

from ._sharenav import (  # noqa: F401
    Config,
    Costmap,
    NoPathError,
    ParseError,
    Simulation,
    ValidationError,
    World,
    arbitrate,
    compose,
    f_lat,
    f_lon,
    fit_direction,
    g_ui_local,
    map_user_velocity,
    nearest_free,
    obstacle_costmap,
    plan,
    run_jsonl,
    step_kinematics,
)


def load_world(path):
    return World.from_file(str(path))


def make_config(**overrides):
    """Config with the given keys replaced, e.g. make_config(timeout=30)."""
    return Config(json.dumps(overrides))


def parse_record(text):
    """Splits record JSON lines into (rows, summary)."""
    rows, summary = [], None
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj.get("type") == "summary":
            summary = obj
        else:
            rows.append(obj)
    return rows, summary


def run(world, mode="sc", trace=(), config=None):
    """Headless run. `trace` is a path or an iterable of event dicts."""
    if isinstance(trace, (str, Path)):
        text = Path(trace).read_text()
    else:
        text = "".join(json.dumps(e) + "\n" for e in trace)
    if isinstance(world, (str, Path)):
        world = load_world(world)
    return parse_record(run_jsonl(world, mode, text, config or Config()))
