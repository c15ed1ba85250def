#!/usr/bin/env python3
"""Regenerates the bundled demo snapshot under data/snapshot/.

The snapshot is synthetic: 30 fictional countries with 90 days of daily death
counts and Google-style mobility percent changes. Growth slows after Day 0 in
proportion to the mobility reduction a country enacted, so the three
mobility buckets produce visibly different trajectories. A handful of
countries exercise the edge cases of the pipeline (never reaching the event
threshold, too little pre-event history, no mobility data, sparse mobility,
a rejected negative row, a truncated post-period).

Usage: python3 tools/make_snapshot.py [--out data/snapshot]
"""

import argparse
import csv
import datetime as dt
import math
from pathlib import Path

import numpy as np

SEED = 20200423
START = dt.date(2020, 2, 1)
DAYS = 90
MOBILITY_START_OFFSET = 14  # mobility reports begin two weeks after the death series
CATEGORIES = [
    "retail_and_recreation",
    "grocery_and_pharmacy",
    "parks",
    "transit_stations",
    "workplaces",
    "residential",
]
# Per-category response to a restriction of strength m (fraction).
CATEGORY_FACTOR = {
    "retail_and_recreation": 1.10,
    "grocery_and_pharmacy": 0.60,
    "parks": 0.80,
    "transit_stations": 0.95,
    "workplaces": 0.75,
    "residential": -0.25,
}


def country_plan(rng):
    """Returns a list of dicts describing every country."""
    plan = []
    levels = ["low"] * 9 + ["moderate"] * 8 + ["severe"] * 8
    rng.shuffle(levels)
    for i, level in enumerate(levels):
        if level == "low":
            m = rng.uniform(-0.04, 0.05)
        elif level == "moderate":
            m = rng.uniform(0.20, 0.32)
        else:
            m = rng.uniform(0.58, 0.72)
        plan.append(
            {
                "day0": int(rng.integers(36, 70)),
                "growth": rng.uniform(0.13, 0.22),
                "restriction": m,
                "kind": "normal",
            }
        )
    # Edge cases, assigned to specific normal countries.
    plan[3]["kind"] = "sparse_mobility"
    plan[7]["kind"] = "negative_row"
    plan[11]["kind"] = "late"
    plan[11]["day0"] = 81
    # Extra countries that never enter the analysis.
    plan.append({"day0": 0, "growth": 0.05, "restriction": 0.1, "kind": "never"})
    plan.append({"day0": 0, "growth": 0.04, "restriction": 0.3, "kind": "never"})
    plan.append({"day0": 12, "growth": 0.2, "restriction": 0.5, "kind": "early"})
    plan.append({"day0": 16, "growth": 0.18, "restriction": 0.2, "kind": "early"})
    plan.append({"day0": 50, "growth": 0.17, "restriction": 0.3, "kind": "no_mobility"})
    return plan


def deaths_series(rng, c):
    """Daily deaths for one country."""
    t = np.arange(DAYS, dtype=float)
    if c["kind"] == "never":
        base = 0.3 * np.exp(c["growth"] * t / 3)
        return np.minimum(rng.poisson(base), 1).astype(float)
    g = c["growth"]
    d0 = c["day0"]
    scale = 80.0 * (1.0 - math.exp(-g))
    # Growth slows over the first week after Day 0 according to the restriction.
    slowdown = 0.45 * max(c["restriction"], 0.0)
    log_curve = np.empty(DAYS)
    for k in range(DAYS):
        rel = k - d0
        if rel <= 0:
            log_curve[k] = g * rel
        else:
            ramp = min(rel, 7) / 7.0
            log_curve[k] = g * rel - slowdown * (rel - 3.5 * ramp) if rel >= 7 else g * rel - slowdown * rel * ramp / 2
    expected = scale * np.exp(log_curve)
    noisy = expected * np.exp(rng.normal(0.0, 0.08, DAYS))
    return np.round(noisy)


def mobility_series(rng, c, day0):
    """Percent change per category for one country, as {category: array}."""
    onset = day0 - 20 + int(rng.integers(0, 4))
    out = {}
    for cat in CATEGORIES:
        values = rng.normal(0.0, 2.0, DAYS)
        level = -100.0 * c["restriction"] * CATEGORY_FACTOR[cat]
        values[onset:] += level
        out[cat] = np.round(values)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "snapshot"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(SEED)
    plan = country_plan(rng)
    names = [f"C{i + 1:02d}" for i in range(len(plan))]

    deaths_rows = []
    mobility_rows = []
    for name, c in zip(names, plan):
        deaths = deaths_series(rng, c)
        cumulative = np.cumsum(deaths)
        hit = np.nonzero(cumulative >= 80)[0]
        day0 = int(hit[0]) if hit.size else DAYS // 2
        for k in range(DAYS):
            value = int(deaths[k])
            if c["kind"] == "negative_row" and k == day0 + 6:
                value = -3  # rejected by the parser, leaving a post-period gap
            deaths_rows.append((name, (START + dt.timedelta(days=k)).isoformat(), value))

        if c["kind"] == "no_mobility":
            continue
        mob = mobility_series(rng, c, day0)
        for k in range(MOBILITY_START_OFFSET, DAYS):
            if c["kind"] == "sparse_mobility" and (day0 - 20 <= k < day0) and (k - day0) % 3 != 0:
                continue
            date = (START + dt.timedelta(days=k)).isoformat()
            for cat in CATEGORIES:
                mobility_rows.append((name, date, cat, int(mob[cat][k])))

    # Normalisation cases for the mobility parser.
    mobility_rows.append((names[0], (START + dt.timedelta(days=DAYS - 1)).isoformat(), "unknown_category", 0))
    for i, row in enumerate(mobility_rows):
        if row[0] == names[1] and row[2] == "parks":
            mobility_rows[i] = (row[0], row[1], "parks ", row[3])

    with open(out / "deaths.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["country", "date", "new_deaths"])
        w.writerows(deaths_rows)
    with open(out / "mobility.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["country", "date", "category", "pct_change"])
        w.writerows(mobility_rows)
    print(f"wrote {len(deaths_rows)} death rows and {len(mobility_rows)} mobility rows to {out}")


if __name__ == "__main__":
    main()
