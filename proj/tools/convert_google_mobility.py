#!/usr/bin/env python3
"""Convert Google's Global_Mobility_Report.csv to the long mobility schema.

Output columns are country,date,category,pct_change with one row per observed
cell. Only national rows are kept (no sub-region or metro area); blank cells
are dropped because the reader treats absent rows as missing.

    python tools/convert_google_mobility.py Global_Mobility_Report.csv mobility.csv
"""

import argparse
import csv
import sys

SUFFIX = "_percent_change_from_baseline"
CATEGORIES = (
    "retail_and_recreation",
    "grocery_and_pharmacy",
    "parks",
    "transit_stations",
    "workplaces",
    "residential",
)
SUBNATIONAL = ("sub_region_1", "sub_region_2", "metro_area")


def convert(reader, writer, country_column="country_region", countries=None):
    """Stream rows from a csv.DictReader into a csv.writer; returns rows written."""
    missing = [c for c in (country_column, "date") if c not in (reader.fieldnames or [])]
    missing += [c + SUFFIX for c in CATEGORIES if c + SUFFIX not in (reader.fieldnames or [])]
    if missing:
        raise ValueError("input is missing columns: " + ", ".join(missing))

    rows = []
    for record in reader:
        if any((record.get(col) or "").strip() for col in SUBNATIONAL):
            continue
        country = record[country_column].strip()
        if countries and country not in countries:
            continue
        for category in CATEGORIES:
            value = (record[category + SUFFIX] or "").strip()
            if value:
                rows.append((country, record["date"].strip(), category, value))

    rows.sort(key=lambda r: (r[0], r[2], r[1]))
    writer.writerow(("country", "date", "category", "pct_change"))
    writer.writerows(rows)
    return len(rows)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("input", help="Global_Mobility_Report.csv")
    parser.add_argument("output", help="destination CSV, '-' for stdout")
    parser.add_argument(
        "--country-column",
        default="country_region",
        choices=("country_region", "country_region_code"),
        help="column used as the country identifier",
    )
    parser.add_argument("--country", action="append", help="keep only this country (repeatable)")
    args = parser.parse_args(argv)

    with open(args.input, newline="", encoding="utf-8-sig") as src:
        reader = csv.DictReader(src)
        if args.output == "-":
            n = convert(reader, csv.writer(sys.stdout, lineterminator="\n"), args.country_column, args.country)
        else:
            with open(args.output, "w", newline="", encoding="utf-8") as dst:
                n = convert(reader, csv.writer(dst, lineterminator="\n"), args.country_column, args.country)
    print(f"wrote {n} rows", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
