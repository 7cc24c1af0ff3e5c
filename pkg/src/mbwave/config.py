"""JSON experiment configuration: parsing, validation and construction of module objects."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gtc import GTC1D, TimelikeMarginError, curve_from_config
from .solver import CauchyData, Coefficients

SUBCOMMANDS = ("region", "identity-check", "carleman-check", "simulate", "observability-scan",
               "hum", "optimal-times")
COEFF_FORMS = ("const", "affine", "sine")
DATA_KINDS = ("modes", "sine", "beam", "zero")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _req(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing required field" if path else f"{key}: missing")
    return d[key]


def _num(x, path: str, lo=None, hi=None, integer=False, open_lo=False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {json.dumps(x)}")
    if integer and not float(x).is_integer():
        raise ConfigError(f"{path}: expected an integer, got {x}")
    if not np.isfinite(x):
        raise ConfigError(f"{path}: must be finite")
    if lo is not None and (x <= lo if open_lo else x < lo):
        raise ConfigError(f"{path}: must be {'>' if open_lo else '>='} {lo}, got {x}")
    if hi is not None and x > hi:
        raise ConfigError(f"{path}: must be <= {hi}, got {x}")
    return int(x) if integer else float(x)


def _pair(x, path: str) -> tuple[float, float]:
    if not isinstance(x, (list, tuple)) or len(x) != 2:
        raise ConfigError(f"{path}: expected a pair [a, b]")
    return _num(x[0], f"{path}[0]"), _num(x[1], f"{path}[1]")


# --- coefficients ------------------------------------------------------------------


def _coeff_callable(node, path):
    """Named closed forms; returns (g, d_t g, d_x g)."""
    form = _req(node, "form", path)
    if form == "const":
        c = _num(_req(node, "value", path), f"{path}.value")
        return (lambda t, x: c + 0 * (t + x)), (lambda t, x: 0 * (t + x)), (lambda t, x: 0 * (t + x))
    if form == "affine":
        c0 = _num(node.get("c0", 0.0), f"{path}.c0")
        ct = _num(node.get("ct", 0.0), f"{path}.ct")
        cx = _num(node.get("cx", 0.0), f"{path}.cx")
        return ((lambda t, x: c0 + ct * t + cx * x), (lambda t, x: ct + 0 * (t + x)),
                (lambda t, x: cx + 0 * (t + x)))
    if form == "sine":
        A = _num(node.get("amp", 1.0), f"{path}.amp")
        wt = _num(node.get("freq_t", 0.0), f"{path}.freq_t")
        wx = _num(node.get("freq_x", 0.0), f"{path}.freq_x")
        ph = _num(node.get("phase", 0.0), f"{path}.phase")
        c0 = _num(node.get("offset", 0.0), f"{path}.offset")
        return ((lambda t, x: c0 + A * np.sin(wt * t + wx * x + ph)),
                (lambda t, x: A * wt * np.cos(wt * t + wx * x + ph)),
                (lambda t, x: A * wx * np.cos(wt * t + wx * x + ph)))
    raise ConfigError(f"{path}.form: unknown form {form!r}; expected one of {COEFF_FORMS}")


def build_coefficients(node, path="coefficients") -> Coefficients:
    if node is None or node == "zero":
        return Coefficients()
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected \"zero\" or an object with Xt/Xx/V entries")
    unknown = set(node) - {"Xt", "Xx", "V"}
    if unknown:
        raise ConfigError(f"{path}: unknown entries {sorted(unknown)}")
    parts = {k: _coeff_callable(node[k], f"{path}.{k}") for k in ("Xt", "Xx", "V") if k in node}
    Xt, Xx, V = (parts[k][0] if k in parts else None for k in ("Xt", "Xx", "V"))
    div = None
    if "Xt" in parts or "Xx" in parts:
        dt_Xt = parts["Xt"][1] if "Xt" in parts else (lambda t, x: 0 * (t + x))
        dx_Xx = parts["Xx"][2] if "Xx" in parts else (lambda t, x: 0 * (t + x))
        div = lambda t, x: dt_Xt(t, x) + dx_Xx(t, x)
    return Coefficients(Xt, Xx, V, div)


# --- domain and data ----------------------------------------------------------------


def build_domain(node, path="domain") -> GTC1D:
    lam1 = _req(node, "lam1", path)
    lam2 = _req(node, "lam2", path)
    t_min = _num(_req(node, "t_min", path), f"{path}.t_min")
    t_max = _num(_req(node, "t_max", path), f"{path}.t_max")
    curves = []
    for name, c in (("lam1", lam1), ("lam2", lam2)):
        try:
            curves.append(curve_from_config(c))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{path}.{name}: {e}") from None
    try:
        return GTC1D(curves[0], curves[1], t_min, t_max)
    except TimelikeMarginError as e:
        raise ConfigError(f"{path}: {e}") from None
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None


def build_data(node, dom: GTC1D, tau: float, path: str) -> CauchyData:
    from .estimates import gaussian_beam, mode_data

    kind = _req(node, "kind", path)
    if kind == "modes":
        a = node.get("a", [])
        b = node.get("b", [])
        for nm, arr in (("a", a), ("b", b)):
            if not isinstance(arr, list):
                raise ConfigError(f"{path}.{nm}: expected a list of numbers")
            for i, x in enumerate(arr):
                _num(x, f"{path}.{nm}[{i}]")
        m = max(len(a), len(b), 1)
        a = list(a) + [0.0] * (m - len(a))
        b = list(b) + [0.0] * (m - len(b))
        return mode_data(dom, tau, a, b)
    if kind == "sine":
        # phi0 = amp sin(k pi y) on the slice, phi1 = 0
        k = _num(node.get("k", 1), f"{path}.k", 1, integer=True)
        amp = _num(node.get("amp", 1.0), f"{path}.amp")
        l1, L = float(dom.lam1(tau)), float(dom.width(tau))
        return CauchyData(lambda x: amp * np.sin(k * np.pi * (np.asarray(x, dtype=float) - l1) / L),
                          lambda x: 0.0 * np.asarray(x, dtype=float))
    if kind == "beam":
        return gaussian_beam(_num(_req(node, "x_c", path), f"{path}.x_c"),
                             _num(_req(node, "sigma", path), f"{path}.sigma", 0.0, open_lo=True),
                             _num(_req(node, "k", path), f"{path}.k"),
                             int(_num(node.get("direction", -1), f"{path}.direction")))
    if kind == "zero":
        z = lambda x: 0.0 * np.asarray(x, dtype=float)
        return CauchyData(z, z)
    raise ConfigError(f"{path}.kind: unknown data kind {kind!r}; expected one of {DATA_KINDS}")


def _gamma(node, path, default_window) -> dict:
    """{"1": [[a, b], ...], "2": [...]} or a list of sides meaning the full window."""
    if isinstance(node, list):
        out = {}
        for i, s in enumerate(node):
            side = _num(s, f"{path}[{i}]", integer=True)
            if side not in (1, 2):
                raise ConfigError(f"{path}[{i}]: side must be 1 or 2")
            out[side] = [default_window]
        if not out:
            raise ConfigError(f"{path}: empty observation region")
        return out
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a list of sides or a side -> intervals object")
    out = {}
    for k, iv in node.items():
        if k not in ("1", "2"):
            raise ConfigError(f"{path}.{k}: side must be \"1\" or \"2\"")
        if not isinstance(iv, list):
            raise ConfigError(f"{path}.{k}: expected a list of intervals")
        out[int(k)] = [_pair(p, f"{path}.{k}[{i}]") for i, p in enumerate(iv)]
    return out


# --- the config object ------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    raw: dict
    sha256: str
    domain: GTC1D | None
    coefficients: Coefficients
    window: tuple[float, float] | None
    center: tuple[float, float] | None
    delta: float
    carleman: dict
    grid: tuple[int, int]
    seed: int
    output: str
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})


def parse_grid(s: str, path="--grid") -> tuple[int, int]:
    parts = s.lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ConfigError(f"{path}: expected NXxNT, got {s!r}")
    nx, nt = int(parts[0]), int(parts[1])
    if nx < 4 or nt < 4:
        raise ConfigError(f"{path}: NX and NT must be >= 4")
    return nx, nt


def _check_keys(d: dict, allowed, path):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{path or 'config'}: unknown field(s) {sorted(extra)}")


TOP_KEYS = ("domain", "coefficients", "window", "center", "delta", "carleman", "grid", "seed",
            "output") + tuple(s.replace("-", "_") for s in SUBCOMMANDS)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text)


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    _check_keys(raw, TOP_KEYS, "")
    sha = hashlib.sha256(text.encode()).hexdigest()
    dom = build_domain(raw["domain"]) if "domain" in raw else None
    coeffs = build_coefficients(raw.get("coefficients", "zero"))
    window = _pair(raw["window"], "window") if "window" in raw else None
    if window is not None:
        if not window[1] > window[0]:
            raise ConfigError("window: need tau_minus < tau_plus")
        if dom is not None and (window[0] < dom.t_min or window[1] > dom.t_max):
            raise ConfigError("window: must lie inside [domain.t_min, domain.t_max]")
    center = _pair(raw["center"], "center") if "center" in raw else None
    delta = _num(raw.get("delta", 0.5), "delta", 0.0, 1.0, open_lo=True)
    if delta >= 1.0:
        raise ConfigError("delta: must lie in (0, 1)")
    carl = raw.get("carleman", {})
    if not isinstance(carl, dict):
        raise ConfigError("carleman: expected an object")
    _check_keys(carl, ("n", "a_factor", "a", "b", "eps", "R", "C_prime", "test_function",
                       "a_factors", "count", "ns"), "carleman")
    for k in ("a", "b", "eps", "R", "a_factor", "C_prime"):
        if k in carl:
            _num(carl[k], f"carleman.{k}", 0.0, open_lo=True)
    g = raw.get("grid", [400, 1200])
    if isinstance(g, str):
        grid = parse_grid(g, "grid")
    else:
        gx, gt = _pair(g, "grid")
        grid = (_num(gx, "grid[0]", 4, integer=True), _num(gt, "grid[1]", 4, integer=True))
    seed = _num(raw.get("seed", 0), "seed", 0, 2**64 - 1, integer=True)
    output = raw.get("output", "out")
    if not isinstance(output, str):
        raise ConfigError("output: expected a directory path string")
    sections = {}
    for sc in SUBCOMMANDS:
        key = sc.replace("-", "_")
        if key in raw:
            if not isinstance(raw[key], dict):
                raise ConfigError(f"{key}: expected an object")
            sections[sc] = raw[key]
    return ExperimentConfig(raw, sha, dom, coeffs, window, center, delta, carl, grid, seed,
                            output, sections)


def require(cfg: ExperimentConfig, *names: str) -> None:
    for n in names:
        if getattr(cfg, n) is None:
            raise ConfigError(f"{n}: missing required field for this subcommand")


def gamma_of(cfg: ExperimentConfig, node, path: str) -> dict:
    return _gamma(node, path, cfg.window)


def number(x, path, *args, **kw):
    return _num(x, path, *args, **kw)
