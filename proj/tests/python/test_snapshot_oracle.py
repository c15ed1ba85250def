"""Spreadsheet-style checks of the snapshot run, computed with pandas from the raw CSVs."""

import math

import numpy as np
import pandas as pd
import pytest

from conftest import SNAPSHOT

THRESHOLD, PRE, POST = 80, 20, 15


@pytest.fixture(scope="module")
def deaths():
    df = pd.read_csv(SNAPSHOT / "deaths.csv", parse_dates=["date"])
    # Negative counts are data errors and do not contribute.
    return df[df["new_deaths"] >= 0]


@pytest.fixture(scope="module")
def day0(deaths):
    out = {}
    for country, g in deaths.groupby("country"):
        g = g.sort_values("date")
        start = g["date"].min()
        reached = g[g["new_deaths"].cumsum() >= THRESHOLD]
        if reached.empty:
            continue
        first = reached["date"].iloc[0]
        if (first - start).days >= PRE:
            out[country] = first
    return out


def test_day0_dates_match_cumulative_sum(memo3_run, day0):
    _, doc = memo3_run
    units = {u["unit_id"]: u["day0_date"] for u in doc["panel"]["units"]}
    assert units
    for country, date in units.items():
        assert date == day0[country].strftime("%Y-%m-%d"), country


def test_aligned_row_count(memo3_run, day0):
    _, doc = memo3_run
    kept = {u["unit_id"] for u in doc["panel"]["units"]}
    dropped_later = {e["unit_id"] for e in doc["panel"]["exclusions"] if e["stage"] != "alignment"}
    assert kept | dropped_later == set(day0)
    assert len(doc["panel"]["units"][0]["values"]) == PRE + POST


def test_mobility_score_is_mean_of_observed_cells(memo3_run):
    _, doc = memo3_run
    mob = pd.read_csv(SNAPSHOT / "mobility.csv", parse_dates=["date"])
    mob["category"] = mob["category"].str.strip()
    categories = doc["config"]["mobility_score"]["categories"]
    first, last = doc["config"]["mobility_score"]["lag_window"]
    day0 = {u["unit_id"]: pd.Timestamp(u["day0_date"]) for u in doc["panel"]["units"]}
    sparse = 0
    for unit in doc["partition"]["units"]:
        d0 = day0[unit["unit_id"]]
        window = mob[
            (mob["country"] == unit["unit_id"])
            & mob["category"].isin(categories)
            & (mob["date"] >= d0 + pd.Timedelta(days=first))
            & (mob["date"] <= d0 + pd.Timedelta(days=last))
        ]
        cells = len(categories) * (last - first + 1)
        assert unit["score"] == pytest.approx(window["pct_change"].mean() / 100, abs=1e-12), unit["unit_id"]
        assert unit["coverage"] == pytest.approx(len(window) / cells, abs=1e-12)
        assert unit["low_coverage"] == (len(window) / cells < 0.5)
        sparse += unit["low_coverage"]
    assert sparse >= 1


def test_validation_rmse_recomputed_from_trajectories(memo3_run):
    _, doc = memo3_run
    t0 = doc["panel"]["t0_index"]
    observed = {u["unit_id"]: u["values"][t0:] for u in doc["panel"]["units"]}
    own = {u["unit_id"]: u["label"] for u in doc["partition"]["units"]}
    predicted = {(c["unit_id"], c["label"]): c["values"] for c in doc["counterfactuals"]}
    rows = {r["unit_id"]: r for r in doc["diagnostics"]["validation"]}
    assert set(rows) == set(own)
    for unit, label in own.items():
        pairs = [(p, o) for p, o in zip(predicted[(unit, label)], observed[unit]) if o is not None]
        rmse = math.sqrt(np.mean([(p - o) ** 2 for p, o in pairs]))
        assert rows[unit]["rmse"] == pytest.approx(rmse, rel=1e-12), unit
        assert rows[unit]["observed_days"] == len(pairs)


def test_top_donor_rows(memo3_run):
    _, doc = memo3_run
    k = doc["config"]["top_k"]
    for m in doc["diagnostics"]["models"]:
        assert len(m["top_donors"]) == min(k, len(m["donor_ids"]))


def test_hash_matches_golden(memo3_run, root):
    _, doc = memo3_run
    assert doc["content_hash"] == (root / "tests" / "golden" / "memo3.sha256").read_text().strip()
