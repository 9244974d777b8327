#!/usr/bin/env python3
"""Convert the raw UCI German credit and Adult files into headed CSVs.

The raw files are taken from the `responsibly` wheel, which ships verbatim
copies of the UCI distributions. Usage:

    pip download --no-deps responsibly==0.1.2 -d /tmp/uci
    python3 scripts/prepare_uci.py /tmp/uci/responsibly-0.1.2-py3-none-any.whl data/
"""
import csv
import pathlib
import sys
import zipfile

GERMAN_COLUMNS = [
    "status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "present_employment", "installment_rate", "status_sex",
    "other_debtors", "present_residence_since", "property", "age",
    "installment_plans", "housing", "number_of_existing_credits", "job",
    "number_of_people_liable_for", "telephone", "foreign_worker", "credit",
]
FEMALE_CODES = {"A92", "A95"}

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]


def write_german(raw: str, out: pathlib.Path) -> None:
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GERMAN_COLUMNS + ["gender"])
        for line in raw.splitlines():
            cells = line.split()
            if not cells:
                continue
            assert len(cells) == len(GERMAN_COLUMNS), line
            gender = "female" if cells[8] in FEMALE_CODES else "male"
            w.writerow(cells + [gender])


def write_adult(raw: str, out: pathlib.Path) -> None:
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ADULT_COLUMNS)
        for line in raw.splitlines():
            if not line.strip() or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            assert len(cells) == len(ADULT_COLUMNS), line
            cells[-1] = cells[-1].rstrip(".")
            w.writerow(cells)


def main() -> None:
    wheel, out_dir = sys.argv[1], pathlib.Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    z = zipfile.ZipFile(wheel)
    read = lambda name: z.read(f"responsibly/dataset/{name}").decode()
    write_german(read("german/german.data"), out_dir / "german.csv")
    write_adult(read("adult/adult.data"), out_dir / "adult_train.csv")
    write_adult(read("adult/adult.test"), out_dir / "adult_test.csv")


if __name__ == "__main__":
    main()
