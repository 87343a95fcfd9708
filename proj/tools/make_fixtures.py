#!/usr/bin/env python3
"""Regenerates the bundled worlds and input traces under data/.

The output is deterministic; rerunning it must not change any file.
"""
import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
WORLDS = ROOT / "data" / "worlds"
TRACES = ROOT / "data" / "traces"


def circle(id_, x, y, r, a_priori=True):
    return {"id": id_, "shape": "circle", "center": [x, y], "radius": r,
            "a_priori": a_priori}


def polygon(id_, pts, a_priori=True):
    return {"id": id_, "shape": "polygon", "points": [list(p) for p in pts],
            "a_priori": a_priori}


def pool(id_, x, y, r, intensity=1.0, fade=3.0):
    return {"id": id_, "center": [x, y], "radius": r, "intensity": intensity,
            "fade": fade}


def world(name, bounds, start, goal, obstacles=(), pools=()):
    return {
        "name": name,
        "bounds": {"min": list(bounds[0]), "max": list(bounds[1])},
        "start": {"x": start[0], "y": start[1], "theta": start[2]},
        "goal": list(goal),
        "obstacles": list(obstacles),
        "pools": list(pools),
    }


def forest():
    rng = random.Random(20250101)
    obstacles = [
        polygon("building-west", [(3, 20), (8, 20), (8, 26), (3, 26)]),
        polygon("building-east", [(22, 30), (27, 30), (27, 35), (22, 35)]),
    ]
    trees = []
    while len(trees) < 30:
        x = round(rng.uniform(1.5, 28.5), 2)
        y = round(rng.uniform(4.0, 44.0), 2)
        r = round(rng.uniform(0.25, 0.5), 2)
        if abs(x - 15.0) < 3.0:
            continue  # keep the trail open
        if 2.5 <= x <= 8.5 and 19.5 <= y <= 26.5:
            continue
        if 21.5 <= x <= 27.5 and 29.5 <= y <= 35.5:
            continue
        if any(math.hypot(x - t[0], y - t[1]) < 2.0 for t in trees):
            continue
        trees.append((x, y, r))
    for k, (x, y, r) in enumerate(trees):
        obstacles.append(circle(f"tree-{k:02d}", x, y, r))
    obstacles += [
        circle("person-1", 14.2, 16.0, 0.3, a_priori=False),
        circle("person-2", 16.4, 29.0, 0.3, a_priori=False),
        circle("person-3", 15.1, 39.0, 0.3, a_priori=False),
    ]
    pools = [pool("pool-1", 16.0, 11.0, 1.5), pool("pool-2", 13.8, 23.0, 2.0),
             pool("pool-3", 16.2, 34.0, 1.5)]
    return world("forest", ((0, 0), (30, 50)), (15.0, 2.0, math.pi / 2),
                 (15.0, 47.0), obstacles, pools)


def open_field():
    return world("open", ((0, 0), (30, 30)), (15.0, 2.5, math.pi / 2),
                 (15.0, 27.5))


def corridor():
    walls = [
        polygon("wall-west", [(0, 0), (1.5, 0), (1.5, 30), (0, 30)]),
        polygon("wall-east", [(4.5, 0), (6, 0), (6, 30), (4.5, 30)]),
    ]
    return world("corridor", ((0, 0), (6, 30)), (3.0, 2.5, math.pi / 2),
                 (3.0, 27.5), walls)


def toxic():
    rocks = [circle("rock-1", 4.0, 18.0, 0.6), circle("rock-2", 15.5, 30.0, 0.5)]
    pools = [pool("pool-a", 10.0, 12.0, 2.0), pool("pool-b", 10.5, 26.0, 2.5)]
    return world("toxic", ((0, 0), (20, 40)), (10.0, 2.0, math.pi / 2),
                 (10.0, 37.0), rocks, pools)


def slalom():
    people = [circle("person-1", 8.0, 10.0, 0.3, a_priori=False),
              circle("person-2", 7.2, 18.0, 0.3, a_priori=False),
              circle("person-3", 8.8, 26.0, 0.3, a_priori=False),
              circle("person-4", 8.0, 32.0, 0.3, a_priori=False)]
    return world("slalom", ((0, 0), (16, 40)), (8.0, 2.0, math.pi / 2),
                 (8.0, 37.0), people, [pool("pool-1", 4.0, 22.0, 1.0)])


def ev(t, jx=0.0, jy=0.0, trigger=False):
    return {"t": t, "jx": jx, "jy": jy, "trigger": trigger}


def filter_placement(t, jx):
    """Hold the trigger, sweep the stick to jx, release there."""
    return [ev(t, 0.0, 0.0, True), ev(t + 0.4, jx / 2, 0.0, True),
            ev(t + 0.8, jx, 0.0, True), ev(t + 1.0, jx, 0.0, False)]


TRACE_SET = {
    "null": [],
    "stop_lever": [ev(0.0, 0.0, -1.0)],
    "slow": [ev(0.0, 0.0, -0.5), ev(6.0, 0.0, 0.0)],
    "fast": [ev(0.0, 0.0, 1.0)],
    "sc_right": filter_placement(2.0, 0.5) + filter_placement(12.0, 0.3),
    "sc_left": filter_placement(2.0, -0.5),
    "takeover": [ev(3.0, 0.15, 0.0, True), ev(4.0, 0.0, 0.0, True),
                 ev(4.5, 0.0, 0.0, False)],
    "mixed": [ev(1.0, 0.0, 0.5)] + filter_placement(3.0, -0.4)
             + [ev(8.0, 0.0, -0.3), ev(14.0, 0.0, 0.0)],
}


def main():
    WORLDS.mkdir(parents=True, exist_ok=True)
    TRACES.mkdir(parents=True, exist_ok=True)
    for w in (forest(), open_field(), corridor(), toxic(), slalom()):
        (WORLDS / f"{w['name']}.world").write_text(json.dumps(w, indent=2) + "\n")
    for name, events in TRACE_SET.items():
        lines = "".join(json.dumps(e) + "\n" for e in events)
        (TRACES / f"{name}.jsonl").write_text(lines)


if __name__ == "__main__":
    main()
