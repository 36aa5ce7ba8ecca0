"""Command line wiring the zoo, estimator and transports into experiments.

Every run that writes files also writes a manifest (last) listing each
output with its sha256 digest, the effective configuration and per-step
timings. Timings are written as 0.0 unless --timings is passed, so default
outputs are byte-reproducible and the digests can be compared across runs.

Exit codes are stable: 0 success, 1 certificate failure, 2 usage,
3 precondition violation, 4 insufficient data.

Sample jobs are independent of one another; this build runs them on a
single worker so output ordering never depends on scheduling. File writes
happen in declaration order, manifest last.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from typing import Optional

from . import __version__
from .cover import Budget, Cover, PointSet, multiplicity
from .errors import (AdkitError, BudgetExhaustedError, CertificateError,
                     InsufficientRangeError, PreconditionError)
from .estimator import DEFAULT_SEARCH_BUDGET, WindowPolicy, dim_curve, find_min_k
from .fixtures import (amalgam_collapse, doubling_qi, p30_cover,
                       plane_on_line, union_blocks)
from .fuzz import SUITES, run_suite
from .groups.models import parse_group
from .groups.relhyp import relhyp_by_name, relhyp_metric
from .groups.windows import cayley_window, subject_for
from .metric import QuasiIsometryData, diam
from .serialize import (certificate_to_json, cover_from_json, cover_to_json,
                        curve_from_csv, curve_to_csv, curve_to_json,
                        dumps_json, load_json, space_from_json,
                        space_to_json, _num_in, _num_out)
from .transport import UniformFamily, qi_transport, shrink, union_transport

EXIT_OK = 0
EXIT_CERT = 1
EXIT_USAGE = 2
EXIT_PRECONDITION = 3
EXIT_INSUFFICIENT = 4

MANIFEST_SCHEMA = "adkit-manifest@1"
QI_SCHEMA = "adkit-qi@1"
DOMINATE_SCHEMA = "adkit-dominate@1"
BUDGET_ENV = "ADKIT_BUDGET"


class _UsageError(Exception):
    """Bad invocation or unreadable input; maps to exit code 2."""


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _Run:
    """Accumulates outputs, step timings and certificate summaries."""

    def __init__(self, command, config, seed, timings):
        self.command = list(command)
        self.config = dict(config)
        self.seed = seed
        self.timings = timings
        self.steps = []
        self.certs = []
        self.outputs = []

    def step(self, name, t0):
        self.steps.append(
            {"name": name,
             "seconds": round(time.perf_counter() - t0, 3)
             if self.timings else 0.0})

    def certificate(self, name, cert):
        self.certs.append({"name": name, "passed": cert.passed,
                           "claims": len(list(cert.rows()))})

    def emit(self, out_dir, filename, text):
        path = os.path.join(out_dir, filename)
        data = text.encode()
        with open(path, "wb") as fh:
            fh.write(data)
        self.outputs.append({"path": filename, "sha256": _sha256(data)})
        return path

    def write_manifest(self, out_dir, name):
        doc = {"schema": MANIFEST_SCHEMA, "version": __version__,
               "command": self.command, "config": self.config,
               "seed": self.seed, "steps": self.steps,
               "certificates": self.certs, "outputs": self.outputs}
        path = os.path.join(out_dir, f"{name}.manifest.json")
        with open(path, "w") as fh:
            fh.write(dumps_json(doc))
        return path


def _parse_lambdas(text: str) -> tuple:
    """Accepts '1..6', '1,2,5' or a single integer; must strictly increase."""
    text = text.strip()
    try:
        if ".." in text:
            lo, _, hi = text.partition("..")
            vals = list(range(int(lo), int(hi) + 1))
        else:
            vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise _UsageError(f"cannot parse lambda list {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise _UsageError("lambda samples must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise _UsageError("lambda samples must strictly increase")
    return tuple(vals)


def _read_config(path: str) -> dict:
    """key=value lines; '#' starts a comment; values stay strings."""
    out = {}
    try:
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, val = line.partition("=")
                if not sep:
                    raise _UsageError(
                        f"{path}:{ln}: expected key=value, got {line!r}")
                out[key.strip()] = val.strip()
    except OSError as e:
        raise _UsageError(f"cannot read config {path}: {e}")
    return out


def _merge_config(args, keys) -> dict:
    """Effective settings: config file values overridden by explicit flags."""
    file_cfg = _read_config(args.config) if getattr(args, "config", None) \
        else {}
    unknown = set(file_cfg) - set(keys)
    if unknown:
        raise _UsageError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for key, caster in keys.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_cfg:
            try:
                merged[key] = caster(file_cfg[key])
            except (ValueError, TypeError):
                raise _UsageError(
                    f"config key {key}: bad value {file_cfg[key]!r}")
    return merged


def _bool_cfg(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _env_ceiling() -> Optional[int]:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return None
    try:
        val = int(raw)
    except ValueError:
        raise _UsageError(f"{BUDGET_ENV} must be an integer, got {raw!r}")
    if val < 1:
        raise _UsageError(f"{BUDGET_ENV} must be positive")
    return val


def _search_budget(requested: Optional[int]) -> int:
    ceiling = _env_ceiling()
    budget = DEFAULT_SEARCH_BUDGET if requested is None else requested
    return budget if ceiling is None else min(budget, ceiling)


def _work_budget(requested: Optional[int]) -> Optional[Budget]:
    ceiling = _env_ceiling()
    if requested is None and ceiling is None:
        return None
    vals = [v for v in (requested, ceiling) if v is not None]
    return Budget(min(vals))


def _slug(name: str) -> str:
    keep = [c if c.isalnum() else "-" for c in name]
    out = "".join(keep).strip("-")
    while "--" in out:
        out = out.replace("--", "-")
    return out or "run"


def _print_cert(label, cert):
    state = "PASS" if cert.passed else "FAIL"
    print(f"{label}: certificate {state} ({len(list(cert.rows()))} claims)")
    for name, op, claimed, measured, ok in cert.rows():
        mark = "ok" if ok else "FAIL"
        print(f"  {name}: measured {measured} {op} {claimed} [{mark}]")


def _fail(e: AdkitError) -> int:
    sys.stderr.write(f"error[{e.code}]: {e}\n")
    details = getattr(e, "details", None)
    if details:
        pairs = " ".join(f"{k}={v}" for k, v in details.items())
        sys.stderr.write(f"  {pairs}\n")
    if isinstance(e, CertificateError):
        return EXIT_CERT
    if isinstance(e, (InsufficientRangeError, BudgetExhaustedError)):
        return EXIT_INSUFFICIENT
    return EXIT_PRECONDITION


# ---------------------------------------------------------------------------
# adcurve


_ADCURVE_KEYS = {
    "group": str, "lambdas": str, "d_factor": int, "r_factor": int,
    "budget": int, "ball_budget": int, "seed": int, "out": str,
    "name": str, "timings": _bool_cfg,
}


def cmd_adcurve(args) -> int:
    cfg = _merge_config(args, _ADCURVE_KEYS)
    group = cfg.get("group")
    if not group:
        raise _UsageError("adcurve needs --group (or group= in the config)")
    lams = _parse_lambdas(cfg.get("lambdas", "1..4"))
    policy = WindowPolicy(cfg.get("d_factor", 4), cfg.get("r_factor", 5))
    try:
        G = parse_group(group)
    except PreconditionError as e:
        raise _UsageError(f"unknown group {group!r}: {e}")
    seed = cfg.get("seed", 0)
    timings = bool(cfg.get("timings", False))
    out_dir = cfg.get("out") or "."
    name = cfg.get("name") or f"curve-{_slug(group)}"
    os.makedirs(out_dir, exist_ok=True)

    # where the files land is not part of what was computed, so the echo
    # skips out/name and reruns into fresh directories stay byte-identical
    echo = {k: v for k, v in cfg.items() if k not in ("out", "name")}
    echo.setdefault("group", group)
    echo["lambdas"] = ",".join(map(str, lams))
    echo.setdefault("d_factor", policy.d_factor)
    echo.setdefault("r_factor", policy.r_factor)
    run = _Run(["adcurve"], echo, seed, timings)

    subject = subject_for(G, ball_budget=cfg.get("ball_budget"))
    t0 = time.perf_counter()
    curve = dim_curve(subject, lams, policy=policy,
                      budget_limit=_search_budget(cfg.get("budget")))
    run.step("samples", t0)

    gaps = 0
    print(f"curve {curve.subject}: {len(curve.samples)} samples")
    for s in curve.samples:
        if s.method.startswith("error:"):
            gaps += 1
            print(f"  lam={s.lam} GAP ({s.method[len('error:'):]})")
        else:
            up = "?" if s.upper is None else s.upper
            print(f"  lam={s.lam} lower={s.lower} upper={up} "
                  f"method={s.method}")
    t0 = time.perf_counter()
    run.emit(out_dir, f"{name}.csv", curve_to_csv(curve, timings=timings))
    run.emit(out_dir, f"{name}.json",
             dumps_json(curve_to_json(curve, timings=timings)))
    run.step("write", t0)
    manifest = run.write_manifest(out_dir, name)
    print(f"wrote {name}.csv {name}.json {os.path.basename(manifest)}"
          + (f" ({gaps} gap rows)" if gaps else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# combine


def _load_cover(path: str) -> Cover:
    try:
        doc = load_json(path)
        return cover_from_json(doc, base_dir=os.path.dirname(path) or ".")
    except OSError as e:
        raise _UsageError(f"cannot read cover {path}: {e}")
    except (json.JSONDecodeError, AdkitError, KeyError, TypeError) as e:
        raise _UsageError(f"bad cover file {path}: {e}")


def _load_covers_shared(paths) -> list:
    """Load covers that must live on one space; rebinds equal spaces."""
    covers = [_load_cover(p) for p in paths]
    base = covers[0].space
    base_doc = space_to_json(base)
    out = [covers[0]]
    for path, cov in zip(paths[1:], covers[1:]):
        if cov.space is base:
            out.append(cov)
            continue
        if space_to_json(cov.space) != base_doc:
            raise _UsageError(
                f"{path}: cover lives on a different space than {paths[0]}")
        out.append(Cover(
            base,
            tuple(PointSet(base, s.members) for s in cov.sets),
            PointSet(base, cov.window.members)))
    return out


def qi_to_json(q: QuasiIsometryData) -> dict:
    """Quasi-isometry data as a JSON document (inline target space)."""
    if q.quasi_inverse is None:
        raise PreconditionError("transportable data needs a quasi-inverse")
    inv = q.quasi_inverse
    return {"schema": QI_SCHEMA, "target": space_to_json(q.target),
            "map": list(q.mapping), "alpha": _num_out(q.alpha),
            "epsilon": _num_out(q.epsilon), "C": _num_out(q.C),
            "inverse": {"map": list(inv.mapping),
                        "alpha": _num_out(inv.alpha),
                        "epsilon": _num_out(inv.epsilon),
                        "C": _num_out(inv.C)}}


def _qi_from_json(doc, source, base_dir=".") -> QuasiIsometryData:
    if doc.get("schema") != QI_SCHEMA:
        raise _UsageError(f"expected schema {QI_SCHEMA}")
    target = doc["target"]
    if isinstance(target, str):
        target = load_json(os.path.join(base_dir, target))
    tgt = space_from_json(target)
    inv_doc = doc.get("inverse")
    inverse = None
    if inv_doc is not None:
        inverse = QuasiIsometryData(
            tgt, source, tuple(inv_doc["map"]), _num_in(inv_doc["alpha"]),
            _num_in(inv_doc["epsilon"]), _num_in(inv_doc["C"]))
    return QuasiIsometryData(
        source, tgt, tuple(doc["map"]), _num_in(doc["alpha"]),
        _num_in(doc["epsilon"]), _num_in(doc["C"]), quasi_inverse=inverse)


def _combine_shrink(args, budget):
    if args.fixture == "p30":
        cover = p30_cover()
    elif args.cover:
        cover = _load_cover(args.cover)
    else:
        raise _UsageError("combine shrink needs --cover or --fixture p30")
    k = args.k if args.k is not None else 1
    out, cert = shrink(cover, k, budget)
    return out, cert, {"k": k}


def _combine_qi(args, budget):
    lam = args.lam if args.lam is not None else 1
    if args.fixture == "double":
        cover = p30_cover()
        q = doubling_qi(30)
    elif args.cover and args.map:
        cover = _load_cover(args.cover)
        try:
            doc = load_json(args.map)
            q = _qi_from_json(doc, cover.space,
                              base_dir=os.path.dirname(args.map) or ".")
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
            raise _UsageError(f"bad map file {args.map}: {e!r}")
    else:
        raise _UsageError(
            "combine qi needs --cover and --map, or --fixture double")
    out, cert = qi_transport(cover, q, lam, budget)
    return out, cert, {"lam": lam}


def _combine_union(args, budget):
    lam = args.lam if args.lam is not None else 2
    y_cov = None
    if args.fixture == "blocks":
        if args.y:
            raise _UsageError("--y only combines with --covers, not the "
                              "built-in fixture")
        family, lam = union_blocks(args.gap if args.gap is not None else 13)
    elif args.covers:
        paths = list(args.covers) + ([args.y] if args.y else [])
        loaded = _load_covers_shared(paths)
        if args.y:
            y_cov = loaded.pop()
        covers = loaded
        members = tuple((c.window, c) for c in covers)
        family = UniformFamily(
            members,
            mesh_bound=max(max(diam(s) for s in c.sets) for c in covers),
            lebesgue_floor=lam,
            multiplicity_bound=max(multiplicity(c) for c in covers))
    else:
        raise _UsageError(
            "combine union needs --covers FILE FILE .. or --fixture blocks")
    out, cert = union_transport(family, y_cov, lam, budget)
    return out, cert, {"lam": lam}


def _combine_action(args, budget):
    fixture = args.fixture or "plane"
    if fixture == "plane":
        fx = plane_on_line()
        out, cert = fx.transport(budget)
        return out, cert, {"lam": fx.lam, "R": fx.R}
    if fixture.startswith("amalgam") or fixture == "trefoil":
        lam = args.lam if args.lam is not None else 1
        run = amalgam_collapse(lam, name=fixture, estimate=False,
                               budget=budget)
        return run.cover, run.certificate, {"lam": lam, "mesh": run.mesh}
    raise _UsageError(f"unknown action fixture {fixture!r}; "
                      "try plane or amalgam:z2*z3")


_COMBINE_OPS = {"shrink": _combine_shrink, "qi": _combine_qi,
                "union": _combine_union, "action": _combine_action}


def cmd_combine(args) -> int:
    op = args.op
    budget = _work_budget(args.budget)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    name = args.name or op
    cfg = {k: v for k, v in (
        ("fixture", args.fixture), ("cover", args.cover),
        ("covers", args.covers), ("map", args.map), ("y", args.y),
        ("k", args.k), ("lam", args.lam), ("gap", args.gap),
    ) if v is not None}
    run = _Run(["combine", op], cfg, 0, args.timings)

    t0 = time.perf_counter()
    out, cert, extra = _COMBINE_OPS[op](args, budget)
    run.step(op, t0)
    run.certificate(op, cert)
    _print_cert(op, cert)

    t0 = time.perf_counter()
    run.emit(out_dir, f"{name}-cover.json", dumps_json(cover_to_json(out)))
    run.emit(out_dir, f"{name}-cert.json",
             dumps_json(certificate_to_json(cert)))
    run.step("write", t0)
    manifest = run.write_manifest(out_dir, name)
    print(f"wrote {name}-cover.json {name}-cert.json "
          f"{os.path.basename(manifest)}")
    if extra:
        print("  " + " ".join(f"{k}={v}" for k, v in extra.items()))
    return EXIT_OK if cert.passed else EXIT_CERT


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise _UsageError(
            f"unknown suite {unknown[0]!r}; known: {', '.join(SUITES)} "
            "(or 'all')")
    failed = False
    for suite in names:
        report = run_suite(suite, count=args.count, seed=args.seed)
        print(report.line())
        if not report.passed:
            failed = True
            for case in report.failures:
                print(f"  counterexample: {case}")
    return EXIT_CERT if failed else EXIT_OK


# ---------------------------------------------------------------------------
# dominate


def _load_curve(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
        return curve_from_csv(text)
    except OSError as e:
        raise _UsageError(f"cannot read curve {path}: {e}")
    except AdkitError as e:
        raise _UsageError(f"bad curve file {path}: {e}")


def cmd_dominate(args) -> int:
    f = _load_curve(args.f)
    g = _load_curve(args.g)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    name = args.name or "dominate"
    run = _Run(["dominate"], {"f": args.f, "g": args.g, "k_max": args.k_max},
               0, args.timings)
    doc = {"schema": DOMINATE_SCHEMA, "f": args.f, "g": args.g,
           "k_max": args.k_max}
    t0 = time.perf_counter()
    try:
        k = find_min_k(f, g, args.k_max)
    except InsufficientRangeError as e:
        run.step("scan", t0)
        doc["verdict"] = "insufficient-range"
        doc["k"] = None
        doc["detail"] = str(e)
        run.emit(out_dir, f"{name}.json", dumps_json(doc))
        run.write_manifest(out_dir, name)
        print(f"insufficient range: {e}")
        return EXIT_INSUFFICIENT
    run.step("scan", t0)
    doc["k"] = k
    doc["verdict"] = "dominated" if k is not None else "not-dominated"
    run.emit(out_dir, f"{name}.json", dumps_json(doc))
    manifest = run.write_manifest(out_dir, name)
    if k is None:
        print(f"{args.f} <= {args.g}: not dominated within k_max "
              f"{args.k_max}")
    else:
        print(f"{args.f} <= {args.g}: minimal k = {k}")
    print(f"wrote {name}.json {os.path.basename(manifest)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# zoo


_ZOO_LINES = (
    ("trivial", "one-point group"),
    ("z:N", "free abelian group of rank N (z:1 is the integers)"),
    ("zgens:A,B,..", "the integers with generating set {+-A, +-B, ..}"),
    ("f:K", "free group of rank K"),
    ("cyclic:N", "finite cyclic group"),
    ("sym:N", "finite symmetric group"),
    ("lamplighter", "Z2 wr Z"),
    ("zwrz", "Z wr Z (window-limited)"),
    ("bs:1,M", "ascending HNN over Z (bs:1,1 is Z^2)"),
    ("amalgam:L*R", "free or amalgamated product; vertices z or zN"),
    ("trefoil", "central amalgam z*_z(2,3)"),
    ("relhyp:fK|letters", "free group with those letter subgroups coned off"),
)


def cmd_zoo(args) -> int:
    if args.zoo_op == "list":
        width = max(len(n) for n, _ in _ZOO_LINES)
        for name, blurb in _ZOO_LINES:
            print(f"{name:<{width}}  {blurb}")
        return EXIT_OK
    name, R = args.group, args.radius
    if R < 0:
        raise _UsageError("radius must be >= 0")
    budget = _work_budget(args.budget)
    try:
        if name.startswith("relhyp:"):
            space = relhyp_metric(relhyp_by_name(name), R, budget)
        else:
            space = cayley_window(parse_group(name), R, budget)
    except PreconditionError as e:
        raise _UsageError(f"unknown group {name!r}: {e}")
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    stem = args.name or f"{_slug(name)}-ball-{R}"
    run = _Run(["zoo", "ball", name, str(R)], {"group": name, "radius": R},
               0, args.timings)
    t0 = time.perf_counter()
    run.emit(out_dir, f"{stem}.json", dumps_json(space_to_json(space)))
    run.step("write", t0)
    manifest = run.write_manifest(out_dir, stem)
    print(f"{name} ball radius {R}: {space.n} points "
          f"({space.meta.get('metric', '?')})")
    print(f"wrote {stem}.json {os.path.basename(manifest)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="adkit",
        description="windowed asymptotic dimension experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    pa = sub.add_parser("adcurve", help="sample a dimension curve")
    pa.add_argument("--group")
    pa.add_argument("--lambdas")
    pa.add_argument("--d-factor", dest="d_factor", type=int)
    pa.add_argument("--r-factor", dest="r_factor", type=int)
    pa.add_argument("--budget", type=int)
    pa.add_argument("--ball-budget", dest="ball_budget", type=int)
    pa.add_argument("--seed", type=int)
    pa.add_argument("--config")
    pa.add_argument("--out")
    pa.add_argument("--name")
    pa.add_argument("--timings", action="store_true", default=None)
    pa.set_defaults(func=cmd_adcurve)

    pc = sub.add_parser("combine", help="run a certified cover operation")
    pc.add_argument("op", choices=sorted(_COMBINE_OPS))
    pc.add_argument("--cover")
    pc.add_argument("--covers", nargs="+")
    pc.add_argument("--map")
    pc.add_argument("--y")
    pc.add_argument("--fixture")
    pc.add_argument("--k", type=int)
    pc.add_argument("--lam", type=int)
    pc.add_argument("--gap", type=int)
    pc.add_argument("--budget", type=int)
    pc.add_argument("--out")
    pc.add_argument("--name")
    pc.add_argument("--timings", action="store_true")
    pc.set_defaults(func=cmd_combine)

    pv = sub.add_parser("verify", help="run a property suite")
    pv.add_argument("suite")
    pv.add_argument("--count", type=int)
    pv.add_argument("--seed", type=int, default=0)
    pv.set_defaults(func=cmd_verify)

    pd = sub.add_parser("dominate", help="compare two curve CSV files")
    pd.add_argument("f")
    pd.add_argument("g")
    pd.add_argument("--k-max", dest="k_max", type=int, default=16)
    pd.add_argument("--out")
    pd.add_argument("--name")
    pd.add_argument("--timings", action="store_true")
    pd.set_defaults(func=cmd_dominate)

    pz = sub.add_parser("zoo", help="list groups or emit a metric window")
    zsub = pz.add_subparsers(dest="zoo_op", required=True)
    zl = zsub.add_parser("list", help="known group names")
    zl.set_defaults(func=cmd_zoo)
    zb = zsub.add_parser("ball", help="write one window as space JSON")
    zb.add_argument("group")
    zb.add_argument("radius", type=int)
    zb.add_argument("--budget", type=int)
    zb.add_argument("--out")
    zb.add_argument("--name")
    zb.add_argument("--timings", action="store_true")
    zb.set_defaults(func=cmd_zoo)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for usage problems
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except AdkitError as e:
        return _fail(e)


if __name__ == "__main__":
    sys.exit(main())
