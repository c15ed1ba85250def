import csv
import io
import subprocess
import sys

import pytest

import synthint
from conftest import ROOT

sys.path.insert(0, str(ROOT / "tools"))
import convert_google_mobility as conv  # noqa: E402

CATS = conv.CATEGORIES
HEADER = (
    "country_region_code,country_region,sub_region_1,sub_region_2,metro_area,iso_3166_2_code,"
    "census_fips_code,place_id,date," + ",".join(c + conv.SUFFIX for c in CATS)
)


def row(code, name, date, values, sub=""):
    cells = ["" if v is None else str(v) for v in values]
    return ",".join([code, name, sub, "", "", "", "", "x", date] + cells)


def sample():
    return "\n".join(
        [
            HEADER,
            row("SE", "Sweden", "2020-03-02", [-5, -1, 10, -12, -4, 2]),
            row("SE", "Sweden", "2020-03-01", [-3, None, 8, -10, -2, 1]),
            row("SE", "Sweden", "2020-03-01", [-90, -90, -90, -90, -90, -90], sub="Stockholm County"),
            row("RO", "Romania", "2020-03-01", [-20, -15, -30, -40, -25, 9]),
        ]
    ) + "\n"


def run(text, **kwargs):
    out = io.StringIO()
    n = conv.convert(csv.DictReader(io.StringIO(text)), csv.writer(out, lineterminator="\n"), **kwargs)
    return n, out.getvalue()


def test_national_rows_become_long_cells_readable_by_the_parser():
    n, text = run(sample())
    assert n == 6 + 5 + 6
    series, rejected = synthint.parse_mobility_csv(text)
    assert rejected == 0
    assert series["Sweden"]["retail_and_recreation"] == {"start": "2020-03-01", "values": [-3.0, -5.0]}
    assert series["Sweden"]["grocery_and_pharmacy"]["values"] == [-1.0]
    assert series["Romania"]["transit_stations"]["values"] == [-40.0]
    assert set(series["Sweden"]) == set(CATS)


def test_country_code_column_and_filter():
    _, text = run(sample(), country_column="country_region_code", countries={"RO"})
    lines = text.splitlines()
    assert lines[0] == "country,date,category,pct_change"
    assert {l.split(",")[0] for l in lines[1:]} == {"RO"}


def test_missing_columns_rejected():
    with pytest.raises(ValueError, match="parks"):
        run(HEADER.replace("parks", "gardens") + "\n")


def test_command_line(tmp_path):
    src = tmp_path / "google.csv"
    src.write_text(sample())
    dst = tmp_path / "mobility.csv"
    subprocess.run([sys.executable, str(ROOT / "tools" / "convert_google_mobility.py"), str(src), str(dst)], check=True)
    assert dst.read_text() == run(sample())[1]
