"""Command-line front end: suite orchestration and report emission.

Commands
--------
star-product        print a star expansion as JSON {order_i: coefficient}
flatness-check      Fedosov residual certificate rows
classify-degree1    degree-1 classification verdict for a symbol, as JSON
quantum-hamiltonian quantum Hamiltonian identity rows for a rotation field
moment-map          su(2) quantum moment map homomorphism defect rows
bt-verify           exact operator identity suites on H_k
bt-asymptotics      Berezin-Toeplitz norm decay and fitted slope rows
report              run suites from a config file and emit one report

Configuration may come from a key = value file (--config) with flags taking
precedence.  Reports are deterministic: two runs with the same configuration
produce identical documents apart from the runtime fields.  Exit codes:
0 all rows pass, 1 any fail/error row, 2 configuration or usage errors.

FEDOSOV_LAB_THREADS caps the case-level worker pool (the merge order is
deterministic regardless).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .scalars import Scalar, rat
from .geometry import GeometryError, make_geometry, su2_action
from .rings import JetAccuracyError
from .expressions import ParseError, parse_expression
from .fedosov import FedosovError, solve_fedosov, star_product
from .quantizable import NotKillingError, check_killing_condition, make_degree1
from .symmetry import MomentMapError, quantum_hamiltonian, quantum_moment_map, moment_series, iota_karabegov
from .hilbert import HilbertError, bt_asymptotic_slope, verify_identities
from .weyl import from_series

SUITE_CHOICES = (
    "flatness", "classify", "star", "quantum-hamiltonian", "moment-map",
    "tuynman", "diagram", "toeplitz-beta", "commutator", "su2", "asymptotics",
)
HILBERT_SUITES = ("tuynman", "diagram", "toeplitz-beta", "commutator", "su2")


class ConfigError(ValueError):
    pass


@dataclass
class SuiteConfig:
    geometry: str = "cp1-fs"
    alpha: str = "ricci"
    order: int = 6
    levels: Tuple[int, ...] = ()
    suites: Tuple[str, ...] = ()
    f: Optional[str] = None
    g: Optional[str] = None
    f0: Optional[str] = None
    c: str = "0"
    force: bool = False
    field_name: str = "rot3"
    asymptotic_order: int = 1
    out: Optional[str] = None
    format: str = "json"

    def validate(self) -> None:
        if self.order < 3:
            raise ConfigError("order must be at least 3")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("levels must be strictly increasing")
        for s in self.suites:
            if s not in SUITE_CHOICES:
                raise ConfigError(f"unknown suite {s!r}")
        if self.format not in ("json", "csv", "md"):
            raise ConfigError(f"unknown format {self.format!r}")
        if "asymptotics" in self.suites:
            if len(self.levels) < 3:
                raise ConfigError("asymptotics needs at least 3 levels")
            if self.f is None or self.g is None:
                raise ConfigError("asymptotics needs --f and --g")
        if "star" in self.suites and (self.f is None or self.g is None):
            raise ConfigError("star needs --f and --g")
        if "classify" in self.suites and self.f0 is None:
            raise ConfigError("classify needs --f0")


@dataclass
class ReportRow:
    suite: str
    case: str
    status: str  # pass | fail | error
    defect: str
    runtime_ms: int = 0


@dataclass
class Report:
    version: str
    config: Dict[str, object]
    rows: List[ReportRow] = field(default_factory=list)

    def exit_code(self) -> int:
        return 0 if all(r.status == "pass" for r in self.rows) else 1


def parse_levels(text: str) -> Tuple[int, ...]:
    """'1..10' or '8,16,32,64'."""
    text = text.strip()
    if not text:
        return ()
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ConfigError(f"empty level range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(x) for x in text.split(","))


def load_config_file(path: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _geometry_from_spec(spec: str):
    if spec.startswith("jet:"):
        path = spec[4:]
        potential, order = _load_jet_file(path)
        return make_geometry("jet", potential=potential, order=order)
    return make_geometry(spec)


def _load_jet_file(path: str):
    """Jet potential file: 'n = <int>', 'order = <int>', then one
    'term <z exps> <zbar exps> <coefficient>' line per monomial, with the
    coefficient an exact rational 'p/q' or Gaussian 'p/q+r/si'."""
    n = 1
    order = None
    terms = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("n") and "=" in line:
                n = int(line.partition("=")[2])
                continue
            if line.startswith("order") and "=" in line:
                order = int(line.partition("=")[2])
                continue
            bits = line.split()
            if bits[0] != "term" or len(bits) != 2 * n + 2:
                raise ConfigError(f"{path}:{lineno}: malformed jet term line")
            ze = tuple(int(x) for x in bits[1:1 + n])
            be = tuple(int(x) for x in bits[1 + n:1 + 2 * n])
            terms[(ze, be)] = _parse_gaussian(bits[-1], path, lineno)
    if order is None:
        raise ConfigError(f"{path}: missing order")
    return terms, order


def _parse_gaussian(text: str, path: str, lineno: int) -> Scalar:
    body = text.replace(" ", "")
    try:
        if body.endswith("i"):
            head = body[:-1]
            for sep in ("+", "-"):
                cut = head.rfind(sep, 1)
                if cut > 0:
                    re_part, im_part = head[:cut], head[cut:]
                    return Scalar.of(rat(re_part), rat(im_part if im_part not in "+-" else im_part + "1"))
            return Scalar.of(0, rat(head if head not in ("", "+", "-") else head + "1"))
        return Scalar.of(rat(body))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{path}:{lineno}: bad coefficient {text!r}") from exc


def _thread_count() -> int:
    raw = os.environ.get("FEDOSOV_LAB_THREADS", "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError("FEDOSOV_LAB_THREADS must be an integer")
    return min(4, os.cpu_count() or 1)


def _parallel_map(fn, items: Sequence) -> List:
    """Deterministic-order map with the configured worker cap."""
    workers = _thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- suite execution ---------------------------------------------------------


def _timed(rows: List[ReportRow], suite: str, case: str, fn) -> None:
    t0 = time.perf_counter()
    try:
        status, defect = fn()
    except (NotKillingError, MomentMapError, HilbertError, FedosovError,
            GeometryError, JetAccuracyError, ValueError) as exc:
        status, defect = "error", str(exc)
    ms = int((time.perf_counter() - t0) * 1000)
    rows.append(ReportRow(suite, case, status, defect, ms))


def run_suite(config: SuiteConfig) -> Report:
    """Execute every requested suite; all checks exact unless noted."""
    config.validate()
    report = Report(version=__version__, config=_config_echo(config), rows=[])
    rows = report.rows
    geom = _geometry_from_spec(config.geometry)
    conn = None

    def connection():
        nonlocal conn
        if conn is None:
            conn = solve_fedosov(geom, config.alpha, config.order)
        return conn

    for suite in config.suites:
        if suite == "flatness":
            def check_flat():
                c = connection()
                defect = c.residual.drop_above_weight(c.N)
                return ("pass", "0") if defect.is_zero() else ("fail", defect.to_lines()[0])
            _timed(rows, suite, f"{config.geometry},alpha={config.alpha},N={config.order}", check_flat)
        elif suite == "classify":
            def check_classify():
                f0 = parse_expression(config.f0, geom.ring)
                cval = parse_expression(config.c, geom.ring).constant_value()
                q = make_degree1(connection(), f0, cval, force=config.force)
                ok = q.ybar_degree <= 1 and q.hbar_degree <= 1
                verdict = "degree-1" if ok else "not-degree-1"
                return ("pass" if (ok or config.force) else "fail",
                        f"{verdict}:ybar={q.ybar_degree},hbar={q.hbar_degree}")
            _timed(rows, suite, f"f0={config.f0}", check_classify)
        elif suite == "star":
            def check_star():
                f = parse_expression(config.f, geom.ring)
                g = parse_expression(config.g, geom.ring)
                exp = star_product(connection(), f, g)
                c0_ok = exp.coeff(0) == f * g
                return ("pass" if c0_ok else "fail",
                        ";".join(f"C{i}={exp.coeff(i)}" for i in range(exp.order + 1)))
            _timed(rows, suite, f"f={config.f},g={config.g}", check_star)
        elif suite == "quantum-hamiltonian":
            def check_qh():
                act = su2_action(geom)
                idx = {"rot1": 0, "rot2": 1, "rot3": 2}.get(config.field_name)
                if idx is None:
                    raise ConfigError(f"unknown field {config.field_name!r}")
                c = connection()
                qh = quantum_hamiltonian(c, act.fields[idx])
                target = moment_series(geom, act.moments[idx])
                diff = qh.mu_V - target
                const = all(diff.coeff(h).is_constant() for h in range(2))
                return ("pass" if const else "fail", f"mu_V-target={diff}")
            _timed(rows, suite, config.field_name, check_qh)
        elif suite == "moment-map":
            def check_mm():
                act = su2_action(geom)
                qmm = quantum_moment_map(connection(), act, levels=config.levels)
                return ("pass", f"defect=0;order={qmm.verified_order}")
            _timed(rows, suite, "su2", check_mm)
        elif suite in HILBERT_SUITES:
            act = su2_action(geom)
            c = connection()
            cache: Dict = {}
            levels = config.levels or (1, 2, 3)

            def one_level(k, s=suite):
                t0 = time.perf_counter()
                try:
                    id_rows = verify_identities(c, act, k, suites=(s,), _cache=cache)
                    ms = int((time.perf_counter() - t0) * 1000)
                    return [
                        ReportRow(s, r.case, "pass" if r.passed else "fail", r.defect, ms)
                        for r in id_rows
                    ]
                except (HilbertError, ValueError) as exc:
                    return [ReportRow(s, f"k={k}", "error", str(exc), 0)]

            for level_rows in _parallel_map(one_level, levels):
                rows.extend(level_rows)
        elif suite == "asymptotics":
            def check_asym():
                f = parse_expression(config.f, geom.ring)
                g = parse_expression(config.g, geom.ring)
                rep = bt_asymptotic_slope(connection(), f, g, config.levels,
                                          config.asymptotic_order)
                slope = "0" if rep.slope is None else f"{rep.slope:.6f}"
                errs = ",".join(f"{k}:{rep.errors[k]:.6e}" for k in rep.levels)
                return ("pass", f"slope={slope};errors={errs}")
            _timed(rows, suite, f"f={config.f},g={config.g},order={config.asymptotic_order}", check_asym)
    return report


def _config_echo(config: SuiteConfig) -> Dict[str, object]:
    return {
        "geometry": config.geometry,
        "alpha": config.alpha,
        "order": config.order,
        "levels": list(config.levels),
        "suites": list(config.suites),
        "f": config.f,
        "g": config.g,
        "f0": config.f0,
        "c": config.c,
        "force": config.force,
        "field": config.field_name,
        "asymptotic_order": config.asymptotic_order,
    }


# -- emission ----------------------------------------------------------------


def emit_report(report: Report, fmt: str = "json") -> bytes:
    """Byte-deterministic emission (runtime fields excluded from csv/md)."""
    if fmt == "json":
        doc = {
            "version": report.version,
            "config": report.config,
            "rows": [
                {
                    "suite": r.suite,
                    "case": r.case,
                    "status": r.status,
                    "defect": r.defect,
                    "runtime_ms": r.runtime_ms,
                }
                for r in report.rows
            ],
        }
        return (json.dumps(doc, indent=2, sort_keys=False) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["suite", "case", "status", "defect"])
        for r in report.rows:
            writer.writerow([r.suite, r.case, r.status, r.defect])
        return buf.getvalue().encode()
    if fmt == "md":
        lines = ["| suite | case | status | defect |", "| --- | --- | --- | --- |"]
        for r in report.rows:
            lines.append(f"| {r.suite} | {r.case} | {r.status} | {r.defect} |")
        return ("\n".join(lines) + "\n").encode()
    raise ConfigError(f"unknown format {fmt!r}")


def _write_out(data: bytes, out: Optional[str]) -> None:
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())


# -- argument plumbing --------------------------------------------------------


def _base_config(args: argparse.Namespace) -> SuiteConfig:
    cfg = SuiteConfig()
    file_values: Dict[str, str] = {}
    if getattr(args, "config", None):
        file_values = load_config_file(args.config)
    def pick(key, flag_value, cast=lambda x: x):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return cast(file_values[key])
        return None
    geometry = pick("geometry", getattr(args, "geometry", None))
    if geometry:
        cfg.geometry = geometry
    alpha = pick("alpha", getattr(args, "alpha", None))
    if alpha:
        cfg.alpha = alpha
    order = pick("order", getattr(args, "order", None), int)
    if order is not None:
        cfg.order = int(order)
    levels = pick("levels", getattr(args, "levels", None))
    if levels:
        cfg.levels = parse_levels(levels) if isinstance(levels, str) else levels
    suites = pick("suites", getattr(args, "suite", None))
    if suites:
        cfg.suites = tuple(s.strip() for s in suites.split(",")) if isinstance(suites, str) else tuple(suites)
    for key in ("f", "g", "f0", "c"):
        val = pick(key, getattr(args, key, None))
        if val is not None:
            setattr(cfg, key, val)
    force = pick("force", getattr(args, "force", None))
    if force is not None:
        cfg.force = force in (True, "true", "1", "yes")
    fieldn = pick("field", getattr(args, "field", None))
    if fieldn:
        cfg.field_name = fieldn
    aorder = pick("asymptotic_order", getattr(args, "asymptotic_order", None))
    if aorder is not None:
        cfg.asymptotic_order = int(aorder)
    fmt = pick("format", getattr(args, "format", None))
    if fmt:
        cfg.format = fmt
    out = pick("out", getattr(args, "out", None))
    if out:
        cfg.out = out
    return cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--geometry", help="flat:<n> | cp1-fs | jet:<path>")
    p.add_argument("--alpha", choices=["zero", "ricci"], help="Karabegov alpha choice")
    p.add_argument("--order", type=int, help="Fedosov truncation weight N (>= 3)")
    p.add_argument("--config", help="key = value config file (flags win)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["json", "csv", "md"], help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedosov-lab",
        description="Exact Wick-type Fedosov quantization with CP^1 geometric-quantization cross checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("star-product", help="expand f * g in hbar")
    _add_common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)

    p = sub.add_parser("flatness-check", help="Fedosov residual certificate")
    _add_common(p)

    p = sub.add_parser("classify-degree1", help="degree-1 quantizable verdict")
    _add_common(p)
    p.add_argument("--f0", required=True)
    p.add_argument("--c", help="additive constant (expression)")
    p.add_argument("--force", action="store_true", default=None,
                   help="run the iteration even for non-Killing f0")

    p = sub.add_parser("quantum-hamiltonian", help="quantum Hamiltonian of a rotation field")
    _add_common(p)
    p.add_argument("--field", choices=["rot1", "rot2", "rot3"], help="su(2) field")

    p = sub.add_parser("moment-map", help="su(2) quantum moment map defects")
    _add_common(p)
    p.add_argument("--action", choices=["su2"], default="su2")
    p.add_argument("--levels", help="e.g. 1..10")

    p = sub.add_parser("bt-verify", help="exact operator identities on H_k")
    _add_common(p)
    p.add_argument("--levels", help="e.g. 1..10")
    p.add_argument("--suite", help="comma list of: tuynman,diagram,toeplitz-beta,commutator,su2")

    p = sub.add_parser("bt-asymptotics", help="Berezin-Toeplitz norm decay")
    _add_common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--levels", help="e.g. 8,16,32,64")
    p.add_argument("--asymptotic-order", dest="asymptotic_order", type=int,
                   help="subtract T_{C_i} corrections through this order")

    p = sub.add_parser("report", help="run suites from a config file")
    _add_common(p)
    p.add_argument("--levels")
    p.add_argument("--suite", help="comma list of suites")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = _base_config(args)
        command = args.command
        if command == "star-product":
            cfg.validate()
            geom = _geometry_from_spec(cfg.geometry)
            conn = solve_fedosov(geom, cfg.alpha, cfg.order)
            f = parse_expression(cfg.f, geom.ring)
            g = parse_expression(cfg.g, geom.ring)
            exp = star_product(conn, f, g)
            doc = {f"order_{i}": str(exp.coeff(i)) for i in range(exp.order + 1)}
            _write_out((json.dumps(doc, indent=2) + "\n").encode(), cfg.out)
            return 0
        if command == "classify-degree1":
            cfg.validate()
            geom = _geometry_from_spec(cfg.geometry)
            f0 = parse_expression(cfg.f0, geom.ring)
            killing = check_killing_condition(geom, f0)
            doc = {"killing": killing.condition_holds}
            if not killing.condition_holds and not cfg.force:
                doc.update({"ybar_degree": None, "hbar_degree": None, "verdict": "not-Killing"})
                _write_out((json.dumps(doc, indent=2) + "\n").encode(), cfg.out)
                return 1
            conn = solve_fedosov(geom, "ricci", cfg.order)
            cval = parse_expression(cfg.c, geom.ring).constant_value()
            q = make_degree1(conn, f0, cval, force=cfg.force)
            verdict = "degree-1" if (q.ybar_degree <= 1 and q.hbar_degree <= 1) else "not-degree-1"
            doc.update({"ybar_degree": q.ybar_degree, "hbar_degree": q.hbar_degree, "verdict": verdict})
            _write_out((json.dumps(doc, indent=2) + "\n").encode(), cfg.out)
            return 0
        # report-style commands
        if command == "flatness-check":
            cfg.suites = ("flatness",)
        elif command == "quantum-hamiltonian":
            cfg.suites = ("quantum-hamiltonian",)
        elif command == "moment-map":
            cfg.suites = ("moment-map",)
            if not cfg.levels:
                cfg.levels = tuple(range(1, 4))
        elif command == "bt-verify":
            if not cfg.suites:
                cfg.suites = HILBERT_SUITES
            bad = [s for s in cfg.suites if s not in HILBERT_SUITES]
            if bad:
                raise ConfigError(f"bt-verify supports {HILBERT_SUITES}, got {bad}")
            if not cfg.levels:
                cfg.levels = tuple(range(1, 11))
        elif command == "bt-asymptotics":
            cfg.suites = ("asymptotics",)
            if not cfg.levels:
                cfg.levels = (8, 16, 32, 64)
        elif command == "report":
            if not cfg.suites:
                raise ConfigError("report needs suites (flag or config file)")
        cfg.validate()
        report = run_suite(cfg)
        _write_out(emit_report(report, cfg.format), cfg.out)
        return report.exit_code()
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, FedosovError, HilbertError, NotKillingError, MomentMapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
