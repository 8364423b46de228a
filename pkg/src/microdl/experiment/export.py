"""Results export.

CSV layout: one header line, then one row per cell record with the columns
``dataset, algorithm, kind, alpha, repeat, seed, accuracy, jaccard, fm, rand,
status, error`` in that order.  Empty ``alpha`` means "not applicable"
(baselines); ``nan`` marks metrics of failed cells.  Summary and Friedman
blocks are recomputed from the records when a CSV is read back.

JSON layout: ``{"format", "records", "summary", "friedman"}`` with sorted keys
and NaN written as ``null``; validated by ``results.schema.json``.
"""

import csv
import io
import json
import math
from importlib import resources

from ..exceptions import ConfigError, DataError
from .runner import METRICS, RECORD_FIELDS, ResultsTable

FORMAT_TAG = "microdl-results/1"


def _schema():
    text = resources.files(__package__).joinpath("results.schema.json").read_text("utf-8")
    return json.loads(text)


def _nan_to_none(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    return obj


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def dumps_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for rec in table.records:
        w.writerow([_fmt(rec[k]) for k in RECORD_FIELDS])
    return buf.getvalue()


def dumps_json(table):
    doc = {"format": FORMAT_TAG, "records": table.records, "summary": table.summary,
           "friedman": table.friedman}
    return json.dumps(_nan_to_none(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"


def export_results(table, path, format="csv"):
    if format == "csv":
        text = dumps_csv(table)
    elif format == "json":
        text = dumps_json(table)
    else:
        raise ConfigError(f"format must be csv or json, got {format!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _parse_record(row):
    rec = dict(zip(RECORD_FIELDS, row))
    try:
        rec["alpha"] = float(rec["alpha"]) if rec["alpha"] else None
        rec["repeat"] = int(rec["repeat"])
        rec["seed"] = int(rec["seed"])
        for m in METRICS:
            rec[m] = float(rec[m])
    except ValueError as exc:
        raise DataError(f"results csv: bad value ({exc})") from None
    return rec


def loads_csv(text, friedman=True):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != RECORD_FIELDS:
        raise DataError(f"results csv: header must be {','.join(RECORD_FIELDS)}")
    return ResultsTable.from_records([_parse_record(r) for r in rows[1:]], friedman=friedman)


def _none_to_nan(rec, keys):
    return {k: (float("nan") if k in keys and v is None else v) for k, v in rec.items()}


def loads_json(text):
    doc = json.loads(text)
    validate_json(doc)
    records = [_none_to_nan(r, METRICS) for r in doc["records"]]
    summary_keys = {f"{m}_{s}" for m in METRICS for s in ("mean", "std")}
    summary = [_none_to_nan(r, summary_keys) for r in doc["summary"]]
    return ResultsTable(records, summary, doc["friedman"])


def validate_json(doc):
    import jsonschema

    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        raise DataError(f"results json: {exc.message}") from None


def read_results(path):
    """Parse a file written by :func:`export_results` (format from the suffix)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        return loads_json(text)
    return loads_csv(text)
