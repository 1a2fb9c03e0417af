"""Command-line front end.

A thin client over the experiment runners: every subcommand builds one
request, executes it either in-process (default) or against a running
service (--server URL), and renders the returned rows as CSV with the
fixed schema  experiment,field,i0,grid,value,err_proxy,extra.

Exit codes: 0 success, 2 usage error, 3 numerical/domain error.  A config
file (--config) supplies `key = value` defaults mirroring the flags; flags
win on conflict.  HELICITY_WORKERS provides the default worker cap.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from .acceptance import run_all
from .errors import FieldSpecError, HelidiskError
from .experiments import (
    parse_grid,
    rows_to_csv,
    run_invariant,
    run_lemma1_limit,
    run_linking,
    run_poincare,
    run_quantize,
    run_theorem2,
)
from .geometry import TWO_PI

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_SERVICE_PATHS = {
    "helicity": "/helicity",
    "form-helicity": "/form-helicity",
    "calabi": "/calabi",
    "generalized-calabi": "/generalized-calabi",
    "quantize": "/quantize",
    "theorem2": "/theorem2",
    "lemma1-limit": "/lemma1-limit",
    "linking": "/linking",
    "poincare": "/poincare",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="helidisk", description=__doc__)
    parser.add_argument("--config", help="file of `key = value` defaults mirroring flags")
    parser.add_argument("--server", help="base URL of a running service; run remotely")
    parser.add_argument("--out", help="write CSV here instead of stdout")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker cap (default: HELICITY_WORKERS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, field=True):
        if field:
            p.add_argument("--field", required=False, default=None)
            p.add_argument("--omega", type=float, default=None,
                           help="rate for the bare `linear` field name")
        p.add_argument("--i0", type=float, default=None)
        p.add_argument("--grid", default=None, help="n_I,n_phi,n_t (default 64,64,64)")

    for name in ("helicity", "form-helicity", "calabi", "generalized-calabi"):
        add_common(sub.add_parser(name, help=f"compute {name} of a field"))

    q = sub.add_parser("quantize", help="lattice check for two generators of one map")
    q.add_argument("--field1", default=None)
    q.add_argument("--field2", default=None)
    add_common(q, field=False)
    q.add_argument("--map-tol", type=float, default=None)
    q.add_argument("--samples", type=int, default=None)
    q.add_argument("--scheme", default=None)
    q.add_argument("--step", type=float, default=None)

    t = sub.add_parser("theorem2", help="build the smooth companion and report the shift")
    t.add_argument("--field", dest="field", default=None, help="base field spec")
    t.add_argument("--omega", type=float, default=None)
    t.add_argument("--n", type=int, default=None)
    t.add_argument("--k", type=int, default=None, choices=(1, 3))
    t.add_argument("--i0", type=float, default=None)
    t.add_argument("--grid", default=None)
    t.add_argument("--samples", type=int, default=None)
    t.add_argument("--scheme", default=None)
    t.add_argument("--step", type=float, default=None)

    lm = sub.add_parser("lemma1-limit", help="Calabi collar limit study")
    lm.add_argument("--n", type=int, default=None)
    lm.add_argument("--i0", type=float, default=None)
    lm.add_argument("--eps", default=None, help="comma-separated collar widths")
    lm.add_argument("--grid", default=None)

    lk = sub.add_parser("linking", help="Monte-Carlo asymptotic linking estimate")
    lk.add_argument("--field", default=None)
    lk.add_argument("--omega", type=float, default=None)
    lk.add_argument("--i0", type=float, default=None)
    lk.add_argument("--periods", type=int, default=None)
    lk.add_argument("--pairs", type=int, default=None)
    lk.add_argument("--seed", type=int, default=None)

    pc = sub.add_parser("poincare", help="sample the period map (plot-ready rows)")
    pc.add_argument("--field", default=None)
    pc.add_argument("--omega", type=float, default=None)
    pc.add_argument("--i0", type=float, default=None)
    pc.add_argument("--samples", type=int, default=None)
    pc.add_argument("--periods", type=int, default=None)
    pc.add_argument("--scheme", default=None)
    pc.add_argument("--step", type=float, default=None)

    st = sub.add_parser("selftest", help="run the acceptance suite")
    st.add_argument("--criteria", default=None, help="subset like 1,3,9 (default: all)")
    return parser


def _read_config(path: str) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise _UsageError(f"{path}:{line_no}: expected `key = value`")
                key, _, val = line.partition("=")
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as e:
        raise _UsageError(f"cannot read config file: {e}")
    return values


def _resolve(args, config: dict, key: str, default, cast):
    """Flag wins, then config file, then the built-in default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        try:
            return cast(config[key])
        except ValueError:
            raise _UsageError(f"config value for {key!r} is not a valid {cast.__name__}")
    return default


def _field_spec(args, config, key="field") -> str:
    spec = _resolve(args, config, key, None, str)
    if spec is None:
        raise _UsageError(f"missing --{key.replace('_', '')}")
    omega = _resolve(args, config, "omega", None, float) if hasattr(args, "omega") else None
    if spec == "linear" and omega is not None:
        spec = f"linear:{omega:g}"
    return spec


def _grid(args, config):
    text = _resolve(args, config, "grid", "64,64,64", str)
    return parse_grid(text)


def _run_local(args, config, workers: int):
    cmd = args.command
    if cmd in ("helicity", "form-helicity", "calabi", "generalized-calabi"):
        return run_invariant(
            cmd,
            _field_spec(args, config),
            i0=_resolve(args, config, "i0", 1.0, float),
            grid=_grid(args, config),
        )
    if cmd == "quantize":
        f1 = _resolve(args, config, "field1", None, str)
        f2 = _resolve(args, config, "field2", None, str)
        if f1 is None or f2 is None:
            raise _UsageError("quantize needs --field1 and --field2")
        return run_quantize(
            f1,
            f2,
            i0=_resolve(args, config, "i0", 1.0, float),
            grid=_grid(args, config),
            map_tol=_resolve(args, config, "map_tol", 1e-4, float),
            samples=_resolve(args, config, "samples", 50, int),
            scheme=_resolve(args, config, "scheme", "rk4-oracle", str),
            step=_resolve(args, config, "step", TWO_PI / 2000.0, float),
        )
    if cmd == "theorem2":
        n = _resolve(args, config, "n", None, int)
        if n is None:
            raise _UsageError("theorem2 needs --n")
        return run_theorem2(
            _field_spec(args, config),
            n=n,
            k=_resolve(args, config, "k", 1, int),
            i0=_resolve(args, config, "i0", 1.0, float),
            grid=_grid(args, config),
            samples=_resolve(args, config, "samples", 50, int),
            scheme=_resolve(args, config, "scheme", "rk4-oracle", str),
            step=_resolve(args, config, "step", TWO_PI / 2000.0, float),
        )
    if cmd == "lemma1-limit":
        n = _resolve(args, config, "n", None, int)
        if n is None:
            raise _UsageError("lemma1-limit needs --n")
        eps_text = _resolve(args, config, "eps", "0.2,0.1,0.05,0.025", str)
        try:
            eps_list = tuple(float(e) for e in eps_text.split(","))
        except ValueError:
            raise _UsageError(f"bad --eps list {eps_text!r}")
        return run_lemma1_limit(
            n,
            i0=_resolve(args, config, "i0", 1.0, float),
            eps_list=eps_list,
            grid=_grid(args, config),
        )
    if cmd == "linking":
        return run_linking(
            _field_spec(args, config),
            i0=_resolve(args, config, "i0", 1.0, float),
            periods=_resolve(args, config, "periods", 16, int),
            pairs=_resolve(args, config, "pairs", 64, int),
            seed=_resolve(args, config, "seed", 0, int),
            workers=workers,
        )
    if cmd == "poincare":
        return run_poincare(
            _field_spec(args, config),
            i0=_resolve(args, config, "i0", 1.0, float),
            samples=_resolve(args, config, "samples", 16, int),
            periods=_resolve(args, config, "periods", 1, int),
            scheme=_resolve(args, config, "scheme", "implicit-midpoint", str),
            step=_resolve(args, config, "step", TWO_PI / 2000.0, float),
        )
    raise _UsageError(f"unknown command {cmd!r}")


def _payload(args, config, workers: int) -> dict:
    """Request body for the service, mirroring the local defaults."""
    cmd = args.command
    body: dict = {}
    if cmd in ("helicity", "form-helicity", "calabi", "generalized-calabi"):
        body = {
            "field": _field_spec(args, config),
            "i0": _resolve(args, config, "i0", 1.0, float),
            "grid": _resolve(args, config, "grid", "64,64,64", str),
        }
    elif cmd == "quantize":
        f1 = _resolve(args, config, "field1", None, str)
        f2 = _resolve(args, config, "field2", None, str)
        if f1 is None or f2 is None:
            raise _UsageError("quantize needs --field1 and --field2")
        body = {
            "field1": f1,
            "field2": f2,
            "i0": _resolve(args, config, "i0", 1.0, float),
            "grid": _resolve(args, config, "grid", "64,64,64", str),
            "map_tol": _resolve(args, config, "map_tol", 1e-4, float),
            "samples": _resolve(args, config, "samples", 50, int),
            "scheme": _resolve(args, config, "scheme", "rk4-oracle", str),
            "step": _resolve(args, config, "step", TWO_PI / 2000.0, float),
        }
    elif cmd == "theorem2":
        n = _resolve(args, config, "n", None, int)
        if n is None:
            raise _UsageError("theorem2 needs --n")
        body = {
            "field": _field_spec(args, config),
            "n": n,
            "k": _resolve(args, config, "k", 1, int),
            "i0": _resolve(args, config, "i0", 1.0, float),
            "grid": _resolve(args, config, "grid", "64,64,64", str),
        }
    elif cmd == "lemma1-limit":
        n = _resolve(args, config, "n", None, int)
        if n is None:
            raise _UsageError("lemma1-limit needs --n")
        body = {
            "n": n,
            "i0": _resolve(args, config, "i0", 1.0, float),
            "eps": [
                float(e)
                for e in _resolve(args, config, "eps", "0.2,0.1,0.05,0.025", str).split(",")
            ],
            "grid": _resolve(args, config, "grid", "64,64,64", str),
        }
    elif cmd == "linking":
        body = {
            "field": _field_spec(args, config),
            "i0": _resolve(args, config, "i0", 1.0, float),
            "periods": _resolve(args, config, "periods", 16, int),
            "pairs": _resolve(args, config, "pairs", 64, int),
            "seed": _resolve(args, config, "seed", 0, int),
            "workers": workers,
        }
    elif cmd == "poincare":
        body = {
            "field": _field_spec(args, config),
            "i0": _resolve(args, config, "i0", 1.0, float),
            "samples": _resolve(args, config, "samples", 16, int),
            "periods": _resolve(args, config, "periods", 1, int),
        }
    else:
        raise _UsageError(f"command {cmd!r} cannot run remotely")
    return body


def _run_remote(server: str, args, config, workers: int, client=None):
    import httpx

    from .experiments import Row

    path = _SERVICE_PATHS.get(args.command)
    if path is None:
        raise _UsageError(f"command {args.command!r} cannot run remotely")
    body = _payload(args, config, workers)
    own_client = client is None
    if own_client:
        client = httpx.Client(base_url=server, timeout=600.0)
    try:
        resp = client.post(path, json=body)
    finally:
        if own_client:
            client.close()
    if resp.status_code == 422:
        raise _UsageError(f"service rejected the request: {resp.text}")
    if resp.status_code != 200:
        raise HelidiskError(f"service error {resp.status_code}: {resp.text}")
    rows = []
    for r in resp.json()["rows"]:
        rows.append(
            Row(
                experiment=r["experiment"],
                field=r["field"],
                i0=r["i0"],
                grid=r["grid"],
                value=r["value"],
                err_proxy=r["err_proxy"],
                extra=dict(r["extra"]),
            )
        )
    return rows


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None, client=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _read_config(args.config) if args.config else {}
        workers = args.workers
        if workers is None:
            text = config.get("workers", os.environ.get("HELICITY_WORKERS", "1"))
            try:
                workers = int(text)
            except ValueError:
                raise _UsageError(f"worker count must be an integer, got {text!r}")
        if workers < 1:
            raise _UsageError("--workers must be >= 1")

        if args.command == "selftest":
            crit_text = _resolve(args, config, "criteria", None, str)
            criteria = None
            if crit_text:
                try:
                    criteria = [int(c) for c in str(crit_text).split(",")]
                except ValueError:
                    raise _UsageError(f"bad --criteria list {crit_text!r}")
                bad = [c for c in criteria if c not in range(1, 11)]
                if bad:
                    raise _UsageError(f"unknown acceptance criteria {bad}; valid are 1..10")
            results = run_all(criteria=criteria, workers=workers)
            if args.out:  # pass/fail lines went to stdout; rows go to the file
                rows = [row for res in results for row in res.rows]
                _emit(rows_to_csv(rows), args.out)
            return EXIT_OK if all(r.passed for r in results) else 1

        if args.server:
            rows = _run_remote(args.server, args, config, workers, client=client)
        else:
            rows = _run_local(args, config, workers)
        _emit(rows_to_csv(rows), args.out)
        return EXIT_OK
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FieldSpecError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except HelidiskError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
