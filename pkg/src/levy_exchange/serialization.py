"""JSON/CSV loading and writing with lossless float formatting."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict

import numpy as np

from .calibration import MarketSnapshot
from .errors import DomainError
from .models import ModelSpec, model_from_dict


class DataError(DomainError):
    """Unreadable or malformed input file; message names the location."""


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, repr floats)."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_model(path: str) -> ModelSpec:
    doc = load_json(path)
    if not isinstance(doc, dict):
        raise DataError(f"{path}: model document must be a JSON object")
    try:
        return model_from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None


def save_model(spec: ModelSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(spec.to_dict()))


def write_csv(path, header, rows) -> None:
    """Rows of values formatted with ``fmt``; strings pass through."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_csv(path, required):
    """Dict rows, checking the header; errors carry file:line."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    with fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"{path}:1:1: missing column(s) {', '.join(missing)}")
        return [(reader.line_num, row) for row in reader]


def _num(path, line, row, key):
    try:
        v = float(row[key])
    except (TypeError, ValueError):
        col = list(row).index(key) + 1
        raise DataError(f"{path}:{line}:{col}: column {key!r} is not a number ({row[key]!r})") from None
    return v


def load_market(directory: str, rate: float = 0.0) -> MarketSnapshot:
    """Read forwards.csv, quotes.csv and (optional) returns.csv from ``directory``.

    forwards: date, product, price (the latest date per product is used)
    quotes:   product, maturity, strike, mid
    returns:  date, product, log_return
    Products are ordered as they first appear in forwards.csv.
    """
    fpath = os.path.join(directory, "forwards.csv")
    qpath = os.path.join(directory, "quotes.csv")
    rpath = os.path.join(directory, "returns.csv")
    latest = {}
    order = []
    for line, row in read_csv(fpath, ("date", "product", "price")):
        p = row["product"]
        if p not in latest:
            order.append(p)
        if p not in latest or row["date"] >= latest[p][0]:
            latest[p] = (row["date"], _num(fpath, line, row, "price"))
    quotes = defaultdict(list)
    for line, row in read_csv(qpath, ("product", "maturity", "strike", "mid")):
        if row["product"] not in latest:
            raise DataError(f"{qpath}:{line}:1: product {row['product']!r} has no forward")
        quotes[row["product"]].append(
            [_num(qpath, line, row, "strike"), _num(qpath, line, row, "maturity"),
             _num(qpath, line, row, "mid")]
        )
    returns = None
    if os.path.exists(rpath):
        by_date = defaultdict(dict)
        for line, row in read_csv(rpath, ("date", "product", "log_return")):
            by_date[row["date"]][row["product"]] = _num(rpath, line, row, "log_return")
        dates = sorted(by_date)
        returns = np.array([[by_date[d].get(p, np.nan) for p in order] for d in dates])
    as_of = max(v[0] for v in latest.values()) if latest else ""
    return MarketSnapshot(np.array([latest[p][1] for p in order]),
                          [np.array(quotes[p]).reshape(-1, 3) for p in order],
                          returns, rate, as_of)


def save_market(snapshot: MarketSnapshot, directory: str, products=None, as_of="2020-01-01",
                dates=None) -> None:
    """Write ``snapshot`` in the three-file layout read by ``load_market``."""
    os.makedirs(directory, exist_ok=True)
    products = products or [f"P{j + 1}" for j in range(snapshot.n_assets)]
    write_csv(os.path.join(directory, "forwards.csv"), ["date", "product", "price"],
              [[as_of, p, f] for p, f in zip(products, snapshot.forwards)])
    write_csv(os.path.join(directory, "quotes.csv"), ["product", "maturity", "strike", "mid"],
              [[p, q[1], q[0], q[2]] for p, qs in zip(products, snapshot.quotes) for q in qs])
    if snapshot.returns is not None:
        r = snapshot.returns
        dates = dates or [f"d{i:06d}" for i in range(len(r))]
        write_csv(os.path.join(directory, "returns.csv"), ["date", "product", "log_return"],
                  [[d, p, r[i, j]] for i, d in enumerate(dates) for j, p in enumerate(products)
                   if np.isfinite(r[i, j])])
