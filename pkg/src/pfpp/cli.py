"""Command-line experiment driver.

Every subcommand is described by a parameter table. Parameters can come from
flags or from a JSON document (``--config``); flags override the document.
``--dump-config`` prints the effective document, which re-runs identically.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, oracles
from .errors import PfppError
from .gibbs import slice_within_gibbs
from .kernels import (
    Grid,
    build_airy_kernel,
    build_finite_kernel,
    corner_growth_kernel,
    default_cutoff,
    discretize,
    fredholm_pfaffian,
    second_eigenvalue_density,
)
from .krylov import (
    BREAKDOWN_RTOL,
    EsrKind,
    SkewInnerProduct,
    cholesky_sop,
    export_sop,
    skew_orthogonality_error,
    symplectic_arnoldi,
)
from .polynomials import RecurrenceBasis
from .sampler import PROB_EPS, sample, sample_batch, stream
from .skew import SKEW_ATOL, SkewMatrix

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    def __init__(self, field, msg, line=None):
        self.field, self.line, self.msg = field, line, msg
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}field '{field}': {msg}" if field else f"{where}{msg}")


def fmt(x):
    return f"{float(x):.17g}"


# parameter tables


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # int, float, str, bool, path, range2, range3
    default: object = None
    required: bool = False
    choices: tuple = None
    help: str = ""


def _p(name, kind, default=None, required=False, choices=None, help=""):
    return Param(name, kind, default, required, tuple(choices) if choices else None, help)


FINITE = ("goe", "gse")
KERNEL_FAMILIES = ("goe", "gse", "airy1", "airy4", "corner-growth")
ESR = tuple(e.value for e in EsrKind)
OUT = _p("out", "path", help="output file (stdout when omitted)")
SEED = _p("seed", "int", required=True)

COMMANDS = {
    "kernel build": [
        _p("family", "str", required=True, choices=KERNEL_FAMILIES),
        _p("N", "int"),
        _p("q", "float", help="corner growth parameter"),
        _p("cutoff", "int", help="corner growth node cutoff"),
        _p("grid", "range3", help="x_min:x_max:delta"),
        _p("esr", "str", "ESR3M", choices=ESR),
        _p("out", "path", required=True, help="SkewMatrix file; the sidecar is <out>.json"),
    ],
    "sample": [
        _p("kernel", "path", required=True),
        _p("samples", "int", required=True),
        SEED,
        _p("order", "str", "natural", choices=("natural", "descending")),
        _p("max_points", "int", help="stop each draw after this many points"),
        _p("reject_last", "bool", help="reject draws containing the last node"),
        OUT,
    ],
    "sop": [
        _p("inner", "str", required=True, choices=("uniform", "uniform4", "geometric", "goe", "gse")),
        _p("n", "int", required=True, help="number of polynomials"),
        _p("nodes", "int", 64, help="discrete node count"),
        _p("q", "float", 0.5, help="geometric weight parameter"),
        _p("method", "str", "arnoldi", choices=("arnoldi", "cholesky")),
        _p("esr", "str", "ESR3M", choices=ESR),
        _p("scheme", "str", "CSGS", choices=("CSGS", "MSGS")),
        _p("reorth", "str", "iterated", choices=("none", "once", "iterated")),
        _p("out", "path", required=True),
    ],
    "oracle goe": [_p("N", "int", required=True), _p("samples", "int", required=True), SEED, OUT],
    "oracle gse": [_p("N", "int", required=True), _p("samples", "int", required=True), SEED, OUT],
    "oracle tridiag": [
        _p("N", "int", required=True),
        _p("beta", "float", required=True),
        _p("samples", "int", required=True),
        SEED,
        _p("top", "int", help="keep only the largest TOP eigenvalues"),
        _p("rescale", "bool", False, help="apply the soft-edge rescaling"),
        OUT,
    ],
    "oracle corner-growth": [
        _p("N", "int", required=True),
        _p("q", "float", required=True),
        _p("samples", "int", required=True),
        SEED,
        OUT,
    ],
    "fredholm": [
        _p("family", "str", required=True, choices=("airy1", "airy4", "goe", "gse")),
        _p("N", "int"),
        _p("s", "range3", required=True, help="start:stop:step"),
        _p("s_max", "float", help="upper end of the gap (default s + 12 for Airy)"),
        _p("nodes", "int", 200),
        OUT,
    ],
    "density second-eig": [
        _p("family", "str", required=True, choices=("airy1", "airy4", "goe", "gse")),
        _p("N", "int"),
        _p("s", "range3", required=True, help="start:stop:step"),
        _p("s_max", "float"),
        _p("nodes", "int", 200),
        OUT,
    ],
    "hist": [
        _p("samples", "path", required=True, help="samples CSV"),
        _p("statistic", "str", "max", choices=("max", "second", "min", "all", "count")),
        _p("bins", "int", 50),
        _p("range", "range2", help="lo:hi (data range when omitted)"),
        _p("batches", "int"),
        _p("batch_size", "int"),
        _p("rescale_N", "int", help="soft-edge rescale with this N"),
        _p("rescale_beta", "float", help="soft-edge rescale with this beta"),
        _p("offset", "float", 0.0, help="added to the statistic"),
        OUT,
    ],
    "gibbs": [
        _p("family", "str", required=True, choices=FINITE),
        _p("N", "int", required=True),
        _p("steps", "int", required=True, help="sweeps including burn-in"),
        _p("burn_in", "int", 100),
        SEED,
        _p("width", "float", 0.5),
        _p("max_doublings", "int", 20),
        _p("thin", "int", 1),
        _p("init_interval", "range2"),
        OUT,
    ],
}


def _parse_range(text, n, field):
    parts = text.split(":")
    if len(parts) != n:
        raise ConfigError(field, f"expected {n} colon-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(field, f"not numeric: {text!r}") from None


def _from_flag(p, text):
    if p.kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(p.name, f"expected an integer, got {text!r}") from None
    if p.kind == "float":
        try:
            return float(text)
        except ValueError:
            raise ConfigError(p.name, f"expected a number, got {text!r}") from None
    if p.kind == "bool":
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(p.name, f"expected a boolean, got {text!r}")
        return low in ("true", "1", "yes")
    if p.kind in ("range2", "range3"):
        return _parse_range(text, int(p.kind[-1]), p.name)
    return text


def _check_value(p, v):
    """Validate a JSON value; returns the normalised value."""
    if v is None:
        return None
    ok = {
        "int": lambda: isinstance(v, int) and not isinstance(v, bool),
        "float": lambda: isinstance(v, (int, float)) and not isinstance(v, bool),
        "str": lambda: isinstance(v, str),
        "path": lambda: isinstance(v, str),
        "bool": lambda: isinstance(v, bool),
        "range2": lambda: _is_numlist(v, 2),
        "range3": lambda: _is_numlist(v, 3),
    }[p.kind]()
    if not ok:
        raise ConfigError(p.name, f"expected {p.kind}, got {v!r}")
    if p.kind == "float":
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(p.name, "must be finite")
    if p.kind.startswith("range"):
        v = [float(x) for x in v]
    if p.choices and v not in p.choices:
        raise ConfigError(p.name, f"must be one of {', '.join(p.choices)}; got {v!r}")
    return v


def _is_numlist(v, n):
    return (isinstance(v, list) and len(v) == n
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v))


def _key_lines(text):
    """Line number of each top-level key, for diagnostics."""
    lines = {}
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith('"'):
            key = s[1:].split('"', 1)[0]
            lines.setdefault(key, i)
    return lines


def load_config(path, command):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(None, f"{path}: invalid JSON: {exc.msg} (column {exc.colno})",
                          line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ConfigError(None, f"{path}: top level must be an object")
    lines = _key_lines(text)
    cmd = doc.pop("command", command)
    if cmd != command:
        raise ConfigError("command", f"config is for {cmd!r}, not {command!r}", lines.get("command"))
    known = {p.name: p for p in COMMANDS[command]}
    values = {}
    for k, v in doc.items():
        if k not in known:
            raise ConfigError(k, "unknown field", lines.get(k))
        try:
            values[k] = _check_value(known[k], v)
        except ConfigError as exc:
            raise ConfigError(k, exc.msg, lines.get(k)) from None
    return values


def resolve(command, flags, config_path=None):
    """Merge defaults, config document and flags into a validated config."""
    params = COMMANDS[command]
    cfg = {p.name: p.default for p in params}
    if config_path:
        cfg.update(load_config(config_path, command))
    for p in params:
        if flags.get(p.name) is not None:
            cfg[p.name] = _check_value(p, _from_flag(p, flags[p.name]))
    for p in params:
        if p.required and cfg[p.name] is None:
            if p.name == "seed":
                raise ConfigError("seed", "a seed is mandatory for sampling commands")
            raise ConfigError(p.name, "required")
        if p.kind == "path" and cfg[p.name] is not None and p.name in ("out",):
            _check_writable(cfg[p.name], p.name)
        if p.kind == "int" and cfg[p.name] is not None and p.name != "seed" and cfg[p.name] < 0:
            raise ConfigError(p.name, "must be non-negative")
    return cfg


def _check_writable(path, field):
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise ConfigError(field, f"directory {d} does not exist")
    if not os.access(d, os.W_OK) or (os.path.exists(path) and not os.access(path, os.W_OK)):
        raise ConfigError(field, f"{path} is not writable")


def dump_config(command, cfg):
    return json.dumps({"command": command, **cfg}, indent=2) + "\n"


# output helpers


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = sys.stdout if self.path is None else open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.path is not None:
            self.fh.close()
        else:
            self.fh.flush()


def write_samples(path, configs, sweeps=None):
    """Samples CSV; entries of ``configs`` are ascending integer or float sequences."""
    with _Output(path) as fh:
        fh.write("sample_index,sweep,points\n" if sweeps is not None else "sample_index,points\n")
        for b, pts in enumerate(configs):
            text = " ".join(str(int(v)) if isinstance(v, (int, np.integer)) else fmt(v) for v in pts)
            fh.write(f"{b},{sweeps[b]},{text}\n" if sweeps is not None else f"{b},{text}\n")


def write_table(path, header, rows):
    with _Output(path) as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def read_samples(path):
    """Parse a samples CSV (with or without a sweep column) into float lists."""
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError("samples", f"cannot read {path}: {exc.strerror}") from None
    with fh:
        header = fh.readline().rstrip("\n").split(",")
        if header not in (["sample_index", "points"], ["sample_index", "sweep", "points"]):
            raise ConfigError("samples", f"{path}: unexpected header {header}")
        out = []
        for i, line in enumerate(fh, 2):
            row = line.rstrip("\n").split(",")
            if len(row) != len(header):
                raise ConfigError("samples", f"{path}: malformed row", line=i)
            try:
                out.append([float(v) for v in row[-1].split()])
            except ValueError:
                raise ConfigError("samples", f"{path}: non-numeric point", line=i) from None
    return out


def _s_values(spec):
    a, b, h = spec
    if not h > 0 or b < a:
        raise ConfigError("s", "need start <= stop and step > 0")
    n = int(math.floor((b - a) / h + 1e-9)) + 1
    return a + h * np.arange(n)


# kernels from configs


def _need(cfg, name, why):
    if cfg.get(name) is None:
        raise ConfigError(name, f"required {why}")
    return cfg[name]


def _continuous_kernel(cfg):
    fam = cfg["family"]
    if fam in FINITE:
        N = _need(cfg, "N", f"for family {fam}")
        if N < 1 or (fam == "goe" and N % 2):
            raise ConfigError("N", "must be a positive even integer for goe" if fam == "goe"
                              else "must be positive")
        return build_finite_kernel({"goe": "GOE_N", "gse": "GSE_N"}[fam], N,
                                   esr=cfg.get("esr", "ESR3M"))
    return build_airy_kernel(1 if fam == "airy1" else 4)


def _default_grid(fam, N):
    if fam == "goe":
        L = 2.0 * math.sqrt(N) + 3.0
        return [-L, L, 0.02]
    if fam == "gse":
        L = math.sqrt(2.0 * N) + 3.0
        return [-L, L, 0.02]
    return [-10.0, 6.0, 0.05]


def _default_s_max(fam, N):
    if fam == "goe":
        return 2.0 * math.sqrt(N) + 10.0
    if fam == "gse":
        return math.sqrt(2.0 * N) + 6.0
    return None


def cmd_kernel_build(cfg):
    fam = cfg["family"]
    side = {"family": None, "params": None}
    if fam == "corner-growth":
        q, N = _need(cfg, "q", "for corner growth"), _need(cfg, "N", "for corner growth")
        if not 0.0 < q < 1.0:
            raise ConfigError("q", "must lie in (0, 1)")
        K = corner_growth_kernel(q, N, cfg["cutoff"], esr=cfg["esr"])
        A = discretize(K)
        side["nodes"] = K.nodes.tolist()
    else:
        K = _continuous_kernel(cfg)
        g = cfg["grid"] or _default_grid(fam, cfg["N"])
        try:
            grid = Grid(*g)
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None
        A = discretize(K, grid)
        side["grid"] = grid.to_dict()
    side["family"], side["params"] = K.family, K.params
    side["build_tolerances"] = {
        "skew_atol": SKEW_ATOL,
        "breakdown_rtol": BREAKDOWN_RTOL,
        "probability_eps": PROB_EPS,
        "expected_points": float(np.sum(np.diagonal(A.array[0::2, 1::2]))),
    }
    A.save(cfg["out"])
    with open(cfg["out"] + ".json", "w") as fh:
        json.dump(side, fh, indent=1)
        fh.write("\n")


def _load_kernel(path):
    try:
        A = SkewMatrix.load(path)
    except OSError as exc:
        raise ConfigError("kernel", f"cannot read {path}: {exc.strerror}") from None
    side = None
    if os.path.exists(path + ".json"):
        with open(path + ".json") as fh:
            side = json.load(fh)
    return A, side


def cmd_sample(cfg):
    A, side = _load_kernel(cfg["kernel"])
    coords = None
    if side and "grid" in side:
        coords = Grid(**side["grid"]).nodes
    elif side and "nodes" in side:
        coords = np.asarray(side["nodes"], dtype=float)
    if coords is not None and coords.size != A.n:
        raise ConfigError("kernel", f"sidecar describes {coords.size} points, matrix has {A.n}")
    order = None if cfg["order"] == "natural" else np.arange(A.n)[::-1]
    reject = cfg["reject_last"]
    if reject is None:
        reject = bool(side and side.get("family") == "CORNER_GROWTH"
                      and side["params"]["cutoff"] < default_cutoff(side["params"]["q"], side["params"]["N"]))
    count, seed, mp = cfg["samples"], cfg["seed"], cfg["max_points"]
    if not reject:
        draws = sample_batch(A, count, seed, order=order, max_points=mp)
    else:
        # rejection: keep drawing streams until enough draws avoid the last node
        W = A.array.copy()
        draws, b = [], 0
        while len(draws) < count:
            s = sample(W, stream(seed, b), order=order, max_points=mp)
            b += 1
            if A.n - 1 not in s:
                draws.append(s)
            if b > 1000 * max(count, 1):
                raise PfppError("rejection rate too high; increase the cutoff")
    configs = []
    for s in draws:
        s = sorted(int(i) for i in s)
        configs.append(s if coords is None else [float(coords[i]) for i in s])
    write_samples(cfg["out"], configs)


def _sop_inner(cfg):
    inner, n, m = cfg["inner"], cfg["n"], cfg["nodes"]
    if inner in ("uniform", "uniform4", "geometric") and m < n + 1:
        raise ConfigError("nodes", f"need at least n + 1 = {n + 1} nodes")
    if inner == "uniform":
        return SkewInnerProduct.beta1_discrete(np.linspace(-1.0, 1.0, m), np.ones(m), max_degree=n + 1)
    if inner == "uniform4":
        return SkewInnerProduct.beta4_discrete(np.linspace(-1.0, 1.0, m), np.ones(m), max_degree=n + 1)
    if inner == "geometric":
        q = cfg["q"]
        if not 0.0 < q < 1.0:
            raise ConfigError("q", "must lie in (0, 1)")
        x = np.arange(m, dtype=float)
        return SkewInnerProduct.beta1_discrete(x, q ** (0.5 * x), max_degree=n + 1)
    if inner == "goe":
        L = 2.0 * math.sqrt(n) + 10.0
        return SkewInnerProduct.beta1_continuous(lambda x: np.exp(-0.25 * np.asarray(x) ** 2),
                                                 (-L, L), n + 1, basis=RecurrenceBasis.hermite(1.0))
    L = math.sqrt(n) + 6.0
    return SkewInnerProduct.beta4_continuous(lambda x: np.exp(-np.asarray(x) ** 2), (-L, L), n + 1,
                                             basis=RecurrenceBasis.hermite(0.5))


def cmd_sop(cfg):
    ip = _sop_inner(cfg)
    if cfg["method"] == "cholesky":
        basis = cholesky_sop(ip, cfg["n"])
    else:
        basis = symplectic_arnoldi(ip, cfg["n"], esr=cfg["esr"], scheme=cfg["scheme"],
                                   reorth=cfg["reorth"])
    export_sop(basis, ip, cfg["out"])
    if cfg["n"] >= 2:
        err, _ = skew_orthogonality_error(basis, ip)
        with open(cfg["out"] + ".json") as fh:
            side = json.load(fh)
        side["skew_orthogonality_error"] = err
        side["config"] = cfg
        with open(cfg["out"] + ".json", "w") as fh:
            json.dump(side, fh, indent=1)
            fh.write("\n")


def _oracle(kind):
    def run(cfg):
        rng = np.random.default_rng(cfg["seed"])
        N, M = cfg["N"], cfg["samples"]
        if N < 1:
            raise ConfigError("N", "must be at least 1")
        if kind in FINITE:
            ev = oracles.dense_batch(kind, N, M, rng)
            write_samples(cfg["out"], [row.tolist() for row in ev])
        elif kind == "tridiag":
            beta, top = cfg["beta"], cfg["top"]
            if not beta > 0:
                raise ConfigError("beta", "must be positive")
            rows = []
            for _ in range(M):
                ev = (oracles.tridiagonal_top(N, beta, rng, top) if top
                      else oracles.tridiagonal_hermite(N, beta, rng).eigenvalues)
                if cfg["rescale"]:
                    # the β=4 tridiagonal model is the GSE scaled by √2
                    ev = (oracles.soft_edge_rescale(ev / math.sqrt(2.0), N, 4) if beta == 4
                          else N ** (1.0 / 6.0) * (ev - 2.0 * math.sqrt(N)))
                rows.append(np.sort(ev).tolist())
            write_samples(cfg["out"], rows)
        else:
            q = cfg["q"]
            if not 0.0 < q < 1.0:
                raise ConfigError("q", "must lie in (0, 1)")
            F = oracles.corner_growth_simulate(N, q, rng, count=M)
            write_samples(cfg["out"], [[int(f)] for f in F])
    return run


def _curve(cfg, fn, column):
    K = _continuous_kernel(cfg)
    fam = cfg["family"]
    s = _s_values(cfg["s"])
    s_max = cfg["s_max"] if cfg["s_max"] is not None else _default_s_max(fam, cfg["N"])
    rows = []
    for v in s:
        top = s_max if s_max is not None else v + 12.0
        rows.append((v, fn(K, v, top, cfg["nodes"])))
    write_table(cfg["out"], ["s", column], rows)


def cmd_fredholm(cfg):
    _curve(cfg, fredholm_pfaffian, "cdf")


def cmd_density(cfg):
    _curve(cfg, second_eigenvalue_density, "density")


def _statistic(configs, stat):
    vals = []
    for pts in configs:
        if stat == "count":
            vals.append(float(len(pts)))
        elif stat == "all":
            vals.extend(pts)
        elif stat == "second":
            if len(pts) >= 2:
                vals.append(sorted(pts)[-2])
        elif pts:
            vals.append(max(pts) if stat == "max" else min(pts))
    return np.asarray(vals, dtype=float)


def cmd_hist(cfg):
    configs = read_samples(cfg["samples"])
    if cfg["rescale_N"] is not None or cfg["rescale_beta"] is not None:
        N = _need(cfg, "rescale_N", "with rescale_beta")
        beta = _need(cfg, "rescale_beta", "with rescale_N")
        configs = [oracles.soft_edge_rescale(p, N, beta).tolist() for p in configs]
    bins = cfg["bins"]
    if bins < 1:
        raise ConfigError("bins", "must be at least 1")
    B, size = cfg["batches"], cfg["batch_size"]
    if (B is None) != (size is None):
        raise ConfigError("batches" if B is None else "batch_size",
                          "batches and batch_size go together")
    if B is not None and (B < 2 or size < 1 or B * size > len(configs)):
        raise ConfigError("batches", f"{B} batches of {size} need more than the "
                                     f"{len(configs)} samples available (and B >= 2)")
    allv = _statistic(configs, cfg["statistic"]) + cfg["offset"]
    if cfg["range"] is not None:
        lo, hi = cfg["range"]
    elif allv.size:
        lo, hi = float(allv.min()), float(allv.max())
    else:
        raise ConfigError("samples", "no values to histogram")
    if not hi > lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    width = np.diff(edges)

    def density(vals):
        counts = np.histogram(vals, edges)[0]
        n = max(vals.size, 1)
        return counts, counts / (n * width)

    counts, dens = density(allv)
    header = ["bin_left", "bin_right", "count", "density"]
    cols = [edges[:-1], edges[1:], counts.astype(int), dens]
    if B is not None:
        per = np.array([density(_statistic(configs[k * size:(k + 1) * size], cfg["statistic"])
                                + cfg["offset"])[1] for k in range(B)])
        header += ["batch_mean", "batch_std"]
        cols += [per.mean(axis=0), per.std(axis=0, ddof=1)]
    rows = []
    for i in range(bins):
        rows.append([str(int(c[i])) if k == 2 else c[i] for k, c in enumerate(cols)])
    write_table(cfg["out"], header, rows)


def cmd_gibbs(cfg):
    if cfg["family"] == "goe" and cfg["N"] % 2:
        raise ConfigError("N", "the GOE kernel needs an even N")
    if not cfg["steps"] > cfg["burn_in"]:
        raise ConfigError("steps", "must exceed burn_in")
    if cfg["thin"] < 1:
        raise ConfigError("thin", "must be at least 1")
    K = _continuous_kernel(cfg)
    rng = np.random.default_rng(cfg["seed"])
    chain = slice_within_gibbs(K, cfg["N"], rng, cfg["steps"], burn_in=cfg["burn_in"],
                               init_interval=cfg["init_interval"], width=cfg["width"],
                               max_doublings=cfg["max_doublings"], thin=cfg["thin"])
    sweeps = [cfg["burn_in"] + k * cfg["thin"] for k in range(len(chain))]
    write_samples(cfg["out"], [row.tolist() for row in chain], sweeps=sweeps)


HANDLERS = {
    "kernel build": cmd_kernel_build,
    "sample": cmd_sample,
    "sop": cmd_sop,
    "oracle goe": _oracle("goe"),
    "oracle gse": _oracle("gse"),
    "oracle tridiag": _oracle("tridiag"),
    "oracle corner-growth": _oracle("corner-growth"),
    "fredholm": cmd_fredholm,
    "density second-eig": cmd_density,
    "hist": cmd_hist,
    "gibbs": cmd_gibbs,
}


# argument parsing


def _add_params(parser, command):
    for p in COMMANDS[command]:
        flag = "--" + p.name.replace("_", "-")
        meta = {"range2": "LO:HI", "range3": "A:B:STEP"}.get(p.kind, p.kind.upper())
        extra = f" (default {p.default})" if p.default is not None else ""
        parser.add_argument(flag, dest=p.name, default=None, metavar=meta, help=p.help + extra)
    parser.add_argument("--config", help="JSON config; flags override its fields")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective config as JSON and exit")
    parser.set_defaults(command=command)


def build_parser():
    ap = argparse.ArgumentParser(prog="pfpp", description="Pfaffian point process experiments")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="group", required=True)
    for command in COMMANDS:
        words = command.split()
        if len(words) == 1:
            _add_params(sub.add_parser(words[0]), command)
    for group, title in (("kernel", "build"), ("density", "second-eig")):
        g = sub.add_parser(group).add_subparsers(dest="action", required=True)
        _add_params(g.add_parser(title), f"{group} {title}")
    g = sub.add_parser("oracle").add_subparsers(dest="action", required=True)
    for kind in ("goe", "gse", "tridiag", "corner-growth"):
        _add_params(g.add_parser(kind), f"oracle {kind}")
    return ap


def _join_negative_values(argv):
    """Let ``--s -4:2:0.1`` through argparse, which would read -4:2:0.1 as a flag."""
    out = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1] and len(tok) > 1
                and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None):
    """Execute one subcommand and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    command = ns.command
    flags = {p.name: getattr(ns, p.name) for p in COMMANDS[command]}
    try:
        cfg = resolve(command, flags, ns.config)
        if ns.dump_config:
            sys.stdout.write(dump_config(command, cfg))
            return EXIT_OK
        HANDLERS[command](cfg)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, PfppError):
            print(f"pfpp {command}: {type(exc).__module__}.{type(exc).__name__}: {exc}",
                  file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"pfpp {command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PfppError, np.linalg.LinAlgError) as exc:
        print(f"pfpp {command}: {type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
