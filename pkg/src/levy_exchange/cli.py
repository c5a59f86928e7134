"""Command-line interface: ``levy-exchange {price,compare,calibrate,simulate}``.

Exit codes: 0 ok, 2 usage, 3 data/admissibility, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import gammapp
from .calibration import calibrate
from .errors import DomainError, NumericalError, NumericalStabilityWarning
from .mc_engine import SimPlan, price_exchange_mc, simulate_increments
from .models import ModelSpec, model_from_dict
from .pricing_closed import ExchangeContract, price_exchange_closed, price_vg_exchange_quadrature
from .pricing_fourier import price_exchange_fourier
from .serialization import DataError, dumps, load_market, load_model, write_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
METHODS = ("closed", "quadrature", "fourier", "mc")
_CONTRACT_KEYS = {"s1": "s1_0", "s2": "s2_0", "T": "maturity_T", "K": "strike_K"}


class UsageError(Exception):
    pass


def parse_contract(text: str) -> dict:
    out = {"strike_K": 0.0}
    for item in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep or key not in _CONTRACT_KEYS:
            raise UsageError(f"bad contract field {item!r}; expected s1=..,s2=..,T=..,K=..")
        try:
            out[_CONTRACT_KEYS[key]] = float(val)
        except ValueError:
            raise UsageError(f"contract field {key} is not a number: {val!r}") from None
    missing = [k for k, v in _CONTRACT_KEYS.items() if v not in out]
    if missing:
        raise UsageError(f"contract is missing {', '.join(missing)}")
    return out


def parse_methods(text: str) -> list:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    if not methods:
        raise UsageError("method set is empty")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {', '.join(bad)}; choose from {', '.join(METHODS)}")
    return methods


def parse_sweep(text: str):
    """``param=start:stop:count`` -> (param, values)."""
    name, sep, rng = text.partition("=")
    parts = rng.split(":")
    if not sep or len(parts) != 3:
        raise UsageError(f"bad sweep {text!r}; expected param=start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"bad sweep range {rng!r}") from None
    if count < 1:
        raise UsageError("sweep count must be positive")
    # snap to 12 decimals so e.g. 0.5 is not written as 0.49999999999999994
    return name, [round(float(v), 12) for v in np.linspace(start, stop, count)]


def price_one(method, contract, spec, plan):
    if method == "closed":
        return price_exchange_closed(contract, spec)
    if method == "quadrature":
        return price_vg_exchange_quadrature(contract, spec)
    if method == "fourier":
        return price_exchange_fourier(contract, spec)
    return price_exchange_mc(contract, spec, plan)


def _apply(spec: ModelSpec, contract: dict, name: str, value: float, unit_mean: bool):
    inv = {v: k for k, v in _CONTRACT_KEYS.items()}
    if name in _CONTRACT_KEYS:
        c = dict(contract)
        c[_CONTRACT_KEYS[name]] = float(value)
        return spec, c
    d = spec.to_dict()
    if name not in d or name in inv:
        raise UsageError(f"sweep parameter {name!r} is neither a contract field nor a model field")
    d[name] = float(value)
    if unit_mean and "alpha" in d and "beta" in d:
        d["beta"] = gammapp.unit_mean_beta(d.get("a", 0.0), d["alpha"])
    return model_from_dict(d), contract


def _diag(d: dict) -> str:
    return json.dumps(json.loads(dumps(d)), sort_keys=True, separators=(",", ":"))


def cmd_price(args) -> int:
    spec = load_model(args.model)
    contract = ExchangeContract(**parse_contract(args.contract))
    methods = parse_methods(args.methods)
    plan = SimPlan(args.paths, args.seed)
    rows = []
    for m in methods:
        rep = price_one(m, contract, spec, plan)
        rows.append([m, rep.price, rep.std_error, None if args.no_timing else rep.runtime,
                     _diag(rep.diagnostics)])
    write_csv(args.out, ["method", "price", "std_error", "runtime", "diagnostics"], rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = load_model(args.model)
    contract = parse_contract(args.contract)
    methods = parse_methods(args.methods)
    name, values = parse_sweep(args.sweep)
    plan = SimPlan(args.paths, args.seed)
    header = [name]
    for m in methods:
        header.append(m)
        if m == "mc":
            header.append("mc_se")
    rows = []
    for v in values:
        s, c = _apply(spec, contract, name, v, args.unit_mean)
        row = [float(v)]
        for m in methods:
            rep = price_one(m, ExchangeContract(**c), s, plan)
            row.append(rep.price)
            if m == "mc":
                row.append(rep.std_error)
        rows.append(row)
    write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    snapshot = load_market(args.market, rate=args.rate)
    kwargs = {}
    if args.model:
        kwargs["template"] = load_model(args.model)
    if args.target is not None:
        kwargs["target"] = args.target
    res = calibrate(snapshot, args.kind, args.dependence, options={"seed": args.seed}, **kwargs)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(dumps(res.to_dict()))
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = load_model(args.model)
    try:
        times = [float(t) for t in args.times.split(",")]
    except ValueError:
        raise UsageError(f"bad --times {args.times!r}") from None
    y = simulate_increments(spec, times, SimPlan(args.paths, args.seed))
    header = ["path", "t"] + [f"y{j + 1}" for j in range(spec.n_assets)]
    rows = ([i, times[k]] + list(y[i, k]) for i in range(y.shape[0]) for k in range(len(times)))
    write_csv(args.out, header, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levy-exchange",
                                description="Exchange option pricing under VG and VG++ models.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model_required=True):
        sp.add_argument("--model", required=model_required, help="ModelSpec JSON file")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--out", required=True, help="output file")

    sp = sub.add_parser("price", help="price one contract with several methods")
    common(sp)
    sp.add_argument("--contract", required=True, help="s1=..,s2=..,T=..,K=..")
    sp.add_argument("--methods", default="closed,fourier,mc")
    sp.add_argument("--paths", type=int, default=1_000_000)
    sp.add_argument("--no-timing", action="store_true",
                    help="leave the runtime column empty (byte-reproducible output)")
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("compare", help="sweep a parameter and tabulate prices per method")
    common(sp)
    sp.add_argument("--contract", required=True)
    sp.add_argument("--methods", default="closed,mc,fourier")
    sp.add_argument("--sweep", required=True, help="param=start:stop:count")
    sp.add_argument("--paths", type=int, default=1_000_000)
    sp.add_argument("--unit-mean", action="store_true",
                    help="reset beta = alpha (1 - a) after each sweep step")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("calibrate", help="two-step calibration from market CSV files")
    common(sp, model_required=False)
    sp.add_argument("--market", required=True, help="directory with forwards/quotes/returns CSV")
    sp.add_argument("--kind", default="VG", choices=("BS", "VG", "VGPP"))
    sp.add_argument("--dependence", default=None,
                    choices=("BS", "VG", "VGPP", "SemeraroVGPP", "LSVGPP", "BBVGPP"))
    sp.add_argument("--rate", type=float, default=0.0)
    sp.add_argument("--target", type=float, default=None, help="override the target correlation")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("simulate", help="write simulated log-return increments")
    common(sp)
    sp.add_argument("--times", default="1.0", help="comma-separated time grid")
    sp.add_argument("--paths", type=int, default=1000)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", NumericalStabilityWarning)
            return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"levy-exchange: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"levy-exchange: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, DomainError, OSError) as exc:
        print(f"levy-exchange: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
