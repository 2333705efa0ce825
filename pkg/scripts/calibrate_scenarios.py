"""Sweep pedestrian timing for a scenario and report the outcome pattern per method.

Usage: python3 scripts/calibrate_scenarios.py SCENARIO --trigger-x 3.5 4.0 --ped-y 3.5 4.0
"""
import argparse
import copy
import json
import time

from bslnav.sim import run_scenario, scenario_from_dict


def outcome(data, methods=(1, 2, 3, 4)):
    sc = scenario_from_dict(data)
    rows = {}
    for m in methods:
        t0 = time.perf_counter()
        r = run_scenario(sc, m)
        rows[m] = (r.goal_reached, r.collided, r.elapsed, time.perf_counter() - t0)
    return rows


def verdict(rows):
    ok = rows[1][1] and all(rows[m][0] and not rows[m][1] for m in (2, 3, 4))
    t2, t3, t4 = rows[2][2], rows[3][2], rows[4][2]
    order = t4 < t3 < t2 and t4 <= 0.9 * t2
    return ok, order


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("scenario")
    ap.add_argument("--trigger-x", type=float, nargs="*")
    ap.add_argument("--ped-y", type=float, nargs="*")
    ap.add_argument("--stop-y", type=float, default=None,
                    help="y at which the pedestrian stops (walking along -y)")
    args = ap.parse_args()
    base = json.load(open(args.scenario))
    w = base["world"]
    for tx in args.trigger_x or [w["trigger"]["ax"]]:
        for py in args.ped_y or [w["dynamic"]["y"]]:
            data = copy.deepcopy(base)
            data["world"]["trigger"]["ax"] = data["world"]["trigger"]["bx"] = tx
            data["world"]["dynamic"]["y"] = py
            if args.stop_y is not None:
                data["world"]["dynamic"]["travel"] = py - args.stop_y
            rows = outcome(data)
            ok, order = verdict(rows)
            cells = "  ".join(f"M{m}:{'G' if g else ('C' if c else 'T')}{e:5.1f}/{wall:.1f}s"
                              for m, (g, c, e, wall) in rows.items())
            print(f"trigger_x={tx:5.2f} ped_y={py:5.2f}  {cells}  outcome={ok} order={order}",
                  flush=True)


if __name__ == "__main__":
    main()
