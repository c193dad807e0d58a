#!/usr/bin/env python3
"""Clean the UCI Adult (census income) files into data/adult.csv.

Usage: prepare_adult.py ADULT_DATA ADULT_TEST OUT_CSV

- drops every row that has a missing ("?") value
- merges marital-status into married / single
- removes the relationship column (it encodes marital status directly)
- strips the trailing "." from labels in the test split
"""
import csv
import sys

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]
MARRIED = {"Married-civ-spouse", "Married-spouse-absent", "Married-AF-spouse"}


def rows(path):
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(COLUMNS) or "?" in cells:
                continue
            rec = dict(zip(COLUMNS, cells))
            rec["income"] = rec["income"].rstrip(".")
            rec["marital-status"] = (
                "married" if rec["marital-status"] in MARRIED else "single"
            )
            del rec["relationship"]
            yield rec


def main():
    data, test, out = sys.argv[1:4]
    header = [c for c in COLUMNS if c != "relationship"]
    n = 0
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for path in (data, test):
            for rec in rows(path):
                w.writerow(rec)
                n += 1
    print(f"wrote {n} records to {out}")


if __name__ == "__main__":
    main()
