import json

import pytest

from defectloss.screening import reference_database_lines


@pytest.fixture(scope="session")
def reference_lines():
    return reference_database_lines()


@pytest.fixture(scope="session")
def reference_records(reference_lines):
    return [json.loads(line) for line in reference_lines]


@pytest.fixture(scope="session")
def al2o3_record(reference_records):
    return next(r for r in reference_records if r["formula"] == "Al2O3")


@pytest.fixture(scope="session")
def reference_db_path(tmp_path_factory, reference_lines):
    path = tmp_path_factory.mktemp("db") / "reference.jsonl"
    path.write_text("\n".join(reference_lines) + "\n", encoding="utf-8")
    return path
