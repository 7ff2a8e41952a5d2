"""Problem files and trajectory CSVs.

A problem file holds one ``key = value`` per line; ``#`` starts a comment
outside of quotes::

    n = 2
    T = 1
    k = 3
    beta = 1, 0.5
    A = 0.3, -0.1; -0.1, 0.3        # rows separated by ';'
    B = 0.5, -0.1; -0.1, 0.5
    f = "0.1*tanh(x1) - 0.1*tanh(y1)", "0.1*tanh(x2) - 0.1*tanh(y2)"
    g = "0.05*tanh(x1)", "0.05*tanh(x2)"
    lipschitz = 0.1, 0.1, 0.05, 0   # optional: a, b, c, d
    growth = 0, 0, 0, 0, 0.1, 0.1   # optional: a, b, c, d, gamma, delta
    box_radius = 10                 # optional
    grid = 2000                     # optional
    theta = 0                       # optional
    tol = 1e-10                     # optional
    max_iter = 500                  # optional
"""

import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, MutualControlError
from .model import Constants, MutualControlProblem, Trajectory, TrajectoryPair
from .vexpr import DEFAULT_BOX_RADIUS, VectorField

REQUIRED_KEYS = ("n", "T", "k", "beta", "A", "B", "f", "g")
OPTIONAL_KEYS = ("lipschitz", "growth", "box_radius", "grid", "theta", "tol", "max_iter")


@dataclass(frozen=True)
class SolverSettings:
    grid: int = 2000
    theta: float | None = None
    tol: float = 1e-10
    max_iter: int = 500


def _strip_comment(line):
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _floats(text, line, key):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"{key}: expected comma-separated numbers, got {text!r}",
                                 line) from None
    if not all(np.isfinite(values)):
        raise ConfigurationError(f"{key}: values must be finite", line)
    return values


def _matrix(text, n, line, key):
    rows = [_floats(r, line, key) for r in text.split(";") if r.strip()]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ConfigurationError(f"{key}: expected {n} rows of {n} numbers", line)
    return np.array(rows)


_STRING_RE = re.compile(r'\s*"([^"]*)"\s*(,|$)')


def _strings(text, line, key):
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _STRING_RE.match(text, pos)
        if m is None:
            raise ConfigurationError(f"{key}: expected comma-separated quoted expressions",
                                     line)
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_problem(text):
    """Parse problem file text into ``(MutualControlProblem, SolverSettings)``."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ConfigurationError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise ConfigurationError(f"duplicate key {key!r}", lineno)
        entries[key] = (value.strip(), lineno)
    for key in REQUIRED_KEYS:
        if key not in entries:
            raise ConfigurationError(f"missing required key {key!r}")

    def scalar(key, kind=float):
        value, line = entries[key]
        try:
            return kind(value)
        except ValueError:
            raise ConfigurationError(f"{key}: cannot parse {value!r}", line) from None

    n = scalar("n", int)
    if n < 1:
        raise ConfigurationError("n must be >= 1", entries["n"][1])
    beta_text, beta_line = entries["beta"]
    beta = _floats(beta_text, beta_line, "beta")
    if len(beta) != n:
        raise ConfigurationError(f"beta: expected {n} values, got {len(beta)}", beta_line)

    kwargs = {
        "n": n,
        "T": scalar("T"),
        "k": scalar("k"),
        "beta": beta,
        "A": _matrix(entries["A"][0], n, entries["A"][1], "A"),
        "B": _matrix(entries["B"][0], n, entries["B"][1], "B"),
    }
    for name in ("f", "g"):
        value, line = entries[name]
        exprs = _strings(value, line, name)
        if len(exprs) != n:
            raise ConfigurationError(f"{name}: expected {n} expressions, got {len(exprs)}",
                                     line)
        try:
            kwargs[name] = VectorField(exprs, n)
        except MutualControlError as exc:
            raise ConfigurationError(f"{name}: {exc}", line) from None

    if "lipschitz" in entries:
        value, line = entries["lipschitz"]
        vals = _floats(value, line, "lipschitz")
        if len(vals) != 4:
            raise ConfigurationError("lipschitz: expected a, b, c, d", line)
        kwargs["lipschitz"] = _constants(vals, line, "lipschitz")
    if "growth" in entries:
        value, line = entries["growth"]
        vals = _floats(value, line, "growth")
        if len(vals) != 6:
            raise ConfigurationError("growth: expected a, b, c, d, gamma, delta", line)
        kwargs["growth"] = _constants(vals, line, "growth")
    kwargs["box_radius"] = scalar("box_radius") if "box_radius" in entries \
        else DEFAULT_BOX_RADIUS

    try:
        problem = MutualControlProblem(**kwargs)
    except MutualControlError as exc:
        raise ConfigurationError(str(exc)) from None

    settings = SolverSettings(
        grid=scalar("grid", int) if "grid" in entries else 2000,
        theta=scalar("theta") if "theta" in entries else None,
        tol=scalar("tol") if "tol" in entries else 1e-10,
        max_iter=scalar("max_iter", int) if "max_iter" in entries else 500,
    )
    _check_settings(settings, entries)
    return problem, settings


def _constants(vals, line, key):
    try:
        return Constants(*vals)
    except MutualControlError as exc:
        raise ConfigurationError(f"{key}: {exc}", line) from None


def _check_settings(s, entries):
    def line(key):
        return entries[key][1] if key in entries else None

    if s.grid < 2:
        raise ConfigurationError("grid must be >= 2", line("grid"))
    if s.theta is not None and not s.theta >= 0:
        raise ConfigurationError("theta must be >= 0", line("theta"))
    if not s.tol > 0:
        raise ConfigurationError("tol must be positive", line("tol"))
    if s.max_iter < 1:
        raise ConfigurationError("max_iter must be >= 1", line("max_iter"))


def read_problem(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem(text)


def _fmt(values):
    return ", ".join(repr(float(v)) for v in values)


def format_problem(p, settings=None, header=None):
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    lines += [
        f"n = {p.n}",
        f"T = {p.T!r}",
        f"k = {p.k!r}",
        f"beta = {_fmt(p.beta)}",
        "A = " + "; ".join(_fmt(r) for r in p.A),
        "B = " + "; ".join(_fmt(r) for r in p.B),
        "f = " + ", ".join(f'"{s}"' for s in p.f.sources()),
        "g = " + ", ".join(f'"{s}"' for s in p.g.sources()),
    ]
    if p.lipschitz is not None:
        c = p.lipschitz
        lines.append(f"lipschitz = {_fmt([c.a, c.b, c.c, c.d])}")
    if p.growth is not None:
        c = p.growth
        lines.append(f"growth = {_fmt([c.a, c.b, c.c, c.d, c.gamma, c.delta])}")
    if p.box_radius != DEFAULT_BOX_RADIUS:
        lines.append(f"box_radius = {p.box_radius!r}")
    if settings is not None:
        lines.append(f"grid = {settings.grid}")
        if settings.theta is not None:
            lines.append(f"theta = {settings.theta!r}")
        lines.append(f"tol = {settings.tol!r}")
        lines.append(f"max_iter = {settings.max_iter}")
    return "\n".join(lines) + "\n"


def atomic_write(path, text):
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mutualctl-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_header(n):
    return ",".join(["t"] + [f"x{i}" for i in range(1, n + 1)]
                    + [f"y{i}" for i in range(1, n + 1)])


def format_csv(pair):
    n = pair.x.values.shape[1]
    rows = np.column_stack([pair.times, pair.x.values, pair.y.values])
    lines = [csv_header(n)]
    lines += [",".join("%.17g" % v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, pair):
    atomic_write(path, format_csv(pair))


def read_csv(path, n, T):
    """Read a trajectory CSV; the grid must be uniform on [0, T]."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    if not lines or lines[0] != csv_header(n):
        raise ConfigurationError(f"CSV header must be {csv_header(n)!r}", 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2 * n + 1:
            raise ConfigurationError(f"expected {2 * n + 1} columns, got {len(parts)}",
                                     lineno)
        try:
            rows.append([float(v) for v in parts])
        except ValueError:
            raise ConfigurationError("non-numeric value", lineno) from None
    data = np.array(rows)
    if data.shape[0] < 3 or not np.all(np.isfinite(data)):
        raise ConfigurationError("CSV needs at least 3 finite rows")
    m = data.shape[0] - 1
    if np.max(np.abs(data[:, 0] - np.linspace(0.0, T, m + 1))) > 1e-12 * max(1.0, T):
        raise ConfigurationError(f"t column is not the uniform grid on [0, {T}]")
    return TrajectoryPair(Trajectory(T, data[:, 1:n + 1]), Trajectory(T, data[:, n + 1:]))
