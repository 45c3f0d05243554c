"""Command-line driver: every sweep and study as a subcommand.

Each subcommand has a typed parameter schema. Values come from the schema
defaults, then from an optional JSON ``--config`` file, then from flags.
Reports are written atomically to ``--output`` as CSV or JSON; a one-line
summary goes to standard output (to standard error when the report itself
is written to standard output with ``--output -``).

Exit status: 0 on success, 2 on a validation error, 3 when
``--assert-residual`` fails or a numerical routine does not converge.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import cylinder, dynamics, fermigas, su2
from .errors import ArgumentError, CompactQError, ExclusionError, IterationError
from .report import ConvergenceReport

__all__ = ["RunConfig", "Param", "SUBCOMMANDS", "list_subcommands", "parse_expression",
           "parse_cylinder_observable", "parse_su2_polynomial", "run", "main"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ASSERT = 3

TWO_PI = 2 * math.pi


# ---------------------------------------------------------------- expression parser

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
                    r"|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*^()]))")


def _tokenize(text: str) -> list:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ArgumentError(f"cannot parse {text!r} at position {pos}")
        num, ident, op = m.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif ident is not None:
            out.append(("id", ident))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str, atoms: dict, constant: Callable):
        self.toks = _tokenize(text)
        self.i = 0
        self.atoms = atoms
        self.constant = constant
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ArgumentError(f"expected {op!r} in {self.text!r}")

    def parse(self):
        if not self.toks:
            raise ArgumentError("empty expression")
        v = self.expr()
        if self.i != len(self.toks):
            raise ArgumentError(f"unexpected trailing input in {self.text!r}")
        return v

    def expr(self):
        v = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            rhs = self.term()
            v = v + rhs if op == "+" else v - rhs
        return v

    def term(self):
        v = self.unary()
        while self.peek() == ("op", "*"):
            self.take()
            v = v * self.unary()
        return v

    def unary(self):
        if self.peek() in (("op", "-"), ("op", "+")):
            _, op = self.take()
            v = self.unary()
            return -v if op == "-" else v
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num" or val != int(val) or val < 0:
                raise ArgumentError(f"exponents must be nonnegative integers in {self.text!r}")
            out = self.constant(1.0)
            for _ in range(int(val)):
                out = out * base
            return out
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return self.constant(val)
        if kind == "id":
            if val not in self.atoms:
                raise ArgumentError(f"unknown symbol {val!r}; expected one of {sorted(self.atoms)}")
            return self.atoms[val]()
        if (kind, val) == ("op", "("):
            v = self.expr()
            self.expect(")")
            return v
        raise ArgumentError(f"unexpected token {val!r} in {self.text!r}")


def parse_expression(text: str, atoms: dict, constant: Callable):
    """Parse ``+ - * ^ ( )`` expressions with real coefficients over named atoms."""
    return _Parser(text, atoms, constant).parse()


def parse_cylinder_observable(text: str) -> cylinder.CylinderObservable:
    """Observable over ``x``, ``z`` and ``zbar``, e.g. ``"x^2*z + 0.5*zbar"``."""
    Obs = cylinder.CylinderObservable
    atoms = {"x": Obs.x, "z": lambda: Obs.z(1), "zbar": lambda: Obs.z(-1)}
    return parse_expression(text, atoms, Obs.constant)


def parse_su2_polynomial(text: str) -> su2.DomainPolynomial:
    """Polynomial over ``x1``, ``x2``, ``x3`` and ``C = x1^2 + x2^2 + x3^2``."""
    P = su2.DomainPolynomial
    atoms = {"x1": lambda: P.x(1), "x2": lambda: P.x(2), "x3": lambda: P.x(3), "C": P.casimir}
    return parse_expression(text, atoms, P.constant)


# ---------------------------------------------------------------- schema


def _parse_floats(value) -> list:
    """Comma list of reals; ``a,b,...,c`` continues the ratio ``b / a`` until ``c``."""
    if not isinstance(value, str):
        return [float(v) for v in np.atleast_1d(value)]
    parts = [p.strip() for p in value.split(",") if p.strip()]
    out: list = []
    i = 0
    while i < len(parts):
        if parts[i] in ("...", ".."):
            if len(out) < 2 or i + 1 >= len(parts):
                raise ArgumentError(f"ellipsis needs two leading values and an end value in {value!r}")
            stop, ratio = float(parts[i + 1]), out[-1] / out[-2]
            if not ratio > 0 or ratio == 1:
                raise ArgumentError(f"cannot infer a geometric step in {value!r}")
            v = out[-1] * ratio
            while (v < stop * (1 - 1e-9)) if ratio > 1 else (v > stop * (1 + 1e-9)):
                out.append(v)
                v *= ratio
            out.append(stop)
            i += 2
            continue
        out.append(float(parts[i]))
        i += 1
    return out


_CONVERTERS = {
    "float": float,
    "int": lambda v: int(v) if float(v) == int(float(v)) else _bad_int(v),
    "str": str,
    "floats": _parse_floats,
    "ints": cylinder.parse_n_list,
    "bool": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes"),
}


def _bad_int(v):
    raise ArgumentError(f"expected an integer, got {v!r}")


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    default: object = None
    help: str = ""

    @property
    def required(self) -> bool:
        return self.default is None and self.kind != "bool"

    def convert(self, value):
        try:
            return _CONVERTERS[self.kind](value)
        except (TypeError, ValueError) as exc:
            raise ArgumentError(f"--{self.name}: {exc}") from exc


@dataclass(frozen=True)
class Subcommand:
    name: str
    help: str
    params: tuple
    runner: Callable


@dataclass
class Outcome:
    """A report, or a plain table with its own columns, plus summary text."""

    report: ConvergenceReport | None = None
    columns: tuple = ()
    rows: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    summary: str = ""

    def final_residual(self) -> float:
        return self.report.final_residual if self.report is not None else float("nan")

    def render(self, fmt: str) -> str:
        if self.report is not None:
            return self.report.to_csv() if fmt == "csv" else self.report.to_json()
        if fmt == "csv":
            lines = [",".join(self.columns)]
            lines += [",".join(repr(float(v)) for v in row) for row in self.rows]
            return "\n".join(lines) + "\n"
        doc = {"columns": list(self.columns), "metadata": dict(sorted(self.metadata.items())),
               "rows": [[float(v) for v in row] for row in self.rows]}
        return json.dumps(doc, indent=1) + "\n"


@dataclass
class RunConfig:
    """A fully resolved invocation."""

    subcommand: str
    params: dict
    output: str | None = None
    format: str = "csv"
    overwrite: bool = False
    assert_residual: float | None = None

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ArgumentError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("csv", "json"):
            raise ArgumentError("format must be csv or json")
        schema = {p.name: p for p in SUBCOMMANDS[self.subcommand].params}
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ArgumentError(f"unknown keys for {self.subcommand}: {unknown}")
        missing = [n for n, p in schema.items() if p.required and self.params.get(n) is None]
        if missing:
            raise ArgumentError(f"missing required parameters for {self.subcommand}: {missing}")


# ---------------------------------------------------------------- runners


def _summary_of(report: ConvergenceReport) -> str:
    return f"rows={len(report)} final_residual={report.final_residual!r}"


def _run_cyl_sep(p):
    r = cylinder.check_separability(parse_cylinder_observable(p["observable"]), p["N"], p["L"], p["M"])
    return Outcome(report=r)


def _run_cyl_vn(p):
    a, b = parse_cylinder_observable(p["a"]), parse_cylinder_observable(p["b"])
    return Outcome(report=cylinder.check_von_neumann(a, b, p["N"], p["L"], p["M"]))


def _run_cyl_dirac(p):
    a, b = parse_cylinder_observable(p["a"]), parse_cylinder_observable(p["b"])
    l = p["l"] if p["l"] >= 0 else max(a.max_index, b.max_index)
    return Outcome(report=cylinder.check_dirac(a, b, l, p["N"], p["L"], p["M"]))


def _run_cyl_prop2(p):
    a, b = parse_cylinder_observable(p["a"]), parse_cylinder_observable(p["b"])
    center, width = p["psi_center"], p["psi_width"]
    if not width > 0:
        raise ArgumentError("psi_width must be positive")

    def psi(k):
        c = np.exp(-0.5 * ((k - center) / width) ** 2)
        return c / np.linalg.norm(c)

    return Outcome(report=cylinder.check_prop2(a, b, psi, p["u"], p["v"], p["M"], p["N"]))


def _run_two_state(p):
    m = dynamics.TwoStateModel(p["H0"], p["Hn"], p["hbar"], p["n"])
    tmax = p["tmax"] if p["tmax"] > 0 else 2 * math.pi / max(m.omega, 1e-300)
    t = np.linspace(0.0, tmax, p["points"])
    closed = dynamics.two_state_probability(m, t)
    if p["trace"]:
        return Outcome(columns=("t", "probability"), rows=np.column_stack([t, closed]),
                       summary=f"max_probability={float(np.max(closed))!r}")
    H = m.matrix()
    psi0 = np.array([1.0, 0.0], dtype=complex)
    numeric = [abs(dynamics.propagate(H, psi0, ti, m.hbar)[1]) ** 2 for ti in t]
    meta = {"study": "two_state", "H0": repr(p["H0"]), "Hn": repr(p["Hn"]), "hbar": repr(p["hbar"]),
            "n": repr(p["n"]), "measured": "propagated", "reference": "sin^2(omega t)"}
    r = ConvergenceReport.from_measurements(t, numeric, closed, meta)
    return Outcome(report=r, summary=f"max_residual={float(np.max(r.residuals))!r}")


def _run_line(p):
    sites, nmax, hbar, E = p["sites"], p["nmax"], p["hbar"], p["E"]
    omega = E / hbar
    if p["trace"]:
        t = np.linspace(0.0, p["t"], p["points"])
        prob = [dynamics.line_probabilities(E, ti, sites, hbar)[p["n"]] for ti in t]
        return Outcome(columns=("t", "probability"), rows=np.column_stack([t, prob]),
                       summary=f"final_probability={float(prob[-1])!r}")
    probs = dynamics.line_probabilities(E, p["t"], sites, hbar)
    ns = np.arange(nmax + 1)
    ref = [dynamics.line_transition_probability(n, p["t"], omega) for n in ns]
    meta = {"study": "line", "E": repr(E), "t": repr(p["t"]), "sites": repr(sites), "hbar": repr(hbar)}
    r = ConvergenceReport.from_measurements(ns, probs[: nmax + 1], ref, meta)
    return Outcome(report=r, summary=f"max_residual={float(np.max(r.residuals))!r}")


def _run_decompactify(p):
    t_grid = None
    if p["tmax"] > 0:
        t_grid = np.linspace(0.0, p["tmax"], p["points"])
    r = dynamics.decompactification_study(p["gap"], p["M"], t_grid, hbar=p["hbar"], mass=p["mass"])
    return Outcome(report=r)


def _fermi_table(p):
    fermions = p["fermions"] if p["fermions"] else [p["N"]]
    return fermigas.energy_table(p["N"], fermions, p["L"], p["mass"], p["hbar"])


def _run_fermi(p):
    fermions = p["fermions"] if p["fermions"] else [p["N"]]
    meta = {"study": "fermi", "N": repr(p["N"]), "L": repr(p["L"]), "mass": repr(p["mass"]),
            "hbar": repr(p["hbar"])}
    if p["table"]:
        rows = _fermi_table(p)
        meta["box"] = "L M / 2 pi hbar = N + 1/2"
    else:
        rows = []
        for n in fermions:
            gas = fermigas.FermiGasParams.from_states(p["N"], int(n), p["L"], p["mass"], p["hbar"])
            try:
                pex = fermigas.pressure_exact(gas, 0.25 * p["L"] / p["N"]).value
            except ExclusionError:
                pex = float("nan")
            rows.append((int(n), fermigas.total_energy(gas), fermigas.pressure_semiclassical(gas), pex))
        rows = np.array(rows, dtype=float)
        meta["box"] = "L M / 2 pi hbar = N"
    last = fermigas.FermiGasParams.from_states(p["N"], int(fermions[-1]), p["L"], p["mass"], p["hbar"])
    summary = f"U={float(rows[-1, 1])!r} E*N={last.E * last.N!r} E={last.E!r}"
    return Outcome(columns=("fermions", "U", "P_semiclassical", "P_exact"), rows=rows, metadata=meta,
                   summary=summary)


def _run_fermi_pressure(p):
    table = _fermi_table(p)
    meta = {"study": "fermi_pressure", "N": repr(p["N"]), "L": repr(p["L"]), "mass": repr(p["mass"]),
            "hbar": repr(p["hbar"]), "measured": "P_exact", "reference": p["reference"]}
    if p["reference"] == "semiclassical":
        ref = table[:, 2]
    elif p["reference"] == "dilute":
        M = TWO_PI * p["hbar"] * (p["N"] + 0.5) / p["L"]
        ref = [fermigas.dilute_pressure(fermigas.FermiGasParams(p["L"], M, p["hbar"], p["mass"], p["N"], int(n)))
               for n in table[:, 0]]
    else:
        raise ArgumentError("reference must be semiclassical or dilute")
    return Outcome(report=ConvergenceReport.from_measurements(table[:, 0], table[:, 3], ref, meta))


def _load_domain(p) -> su2.SemialgebraicDomain:
    spec = p.get("domain") or ""
    if spec:
        text = spec
        if not spec.lstrip().startswith("{"):
            with open(spec, encoding="utf-8") as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"domain is not valid JSON: {exc}") from exc
        return su2.SemialgebraicDomain.from_json(doc)
    if "h" in p and p["h"] is not None and not math.isnan(p["h"]):
        return su2.SemialgebraicDomain.cap(p["R2"], p["h"])
    return su2.SemialgebraicDomain.ball(p["R2"])


def _axial_volume(dom: su2.SemialgebraicDomain, R: float, n: int = 600) -> float:
    # midpoint rule for int 2 pi rho d rho dz over the half-plane rho >= 0
    rho = (np.arange(n) + 0.5) * R / n
    z = -R + (np.arange(2 * n) + 0.5) * R / n
    P, Z = np.meshgrid(rho, z, indexing="ij")
    pts = np.column_stack([P.ravel(), np.zeros(P.size), Z.ravel()])
    inside = dom.closure_contains(pts).reshape(P.shape)
    return float(np.sum(2 * math.pi * P * inside) * (R / n) ** 2)


def _run_domain_dim(p):
    dom = _load_domain(p)
    if dom.radius_hbar_units:
        raise ArgumentError("su2-domain-dim needs a domain in physical units")
    vol = _axial_volume(dom, dom.radius_at(1.0))
    ref = 2 * vol / math.pi
    measured = []
    for h in p["hbar"]:
        measured.append(h**3 * su2.eigenspace_for(dom, h).dimension)
    meta = {"study": "domain_dimension", "measured": "hbar^3 dim", "reference": "2 Vol / pi",
            "volume": repr(vol)}
    return Outcome(report=ConvergenceReport.from_measurements(p["hbar"], measured, ref, meta))


def _run_cap_count(p):
    s2, m2 = p["s2"], p["m2"]
    count = su2.cap_state_count(s2, m2)
    formula = su2.cap_count_formula(s2, m2)
    meta = {"study": "cap_count", "s2": repr(s2), "m2": repr(m2), "measured": "exact count",
            "reference": "closed form"}
    r = ConvergenceReport.from_measurements([s2 / 2], [count], [float(formula)], meta)
    return Outcome(report=r, summary=f"count={count} closed_form={formula}")


def _run_thickness(p):
    r = su2.thickness_ratio(None, p["t"], p["hbar"], R_fixed=p["R"], h_fixed=p["h"])
    return Outcome(report=r, summary=f"final_ratio={float(r.measured[-1])!r}")


def _run_weyl(p):
    ls = p["l"]
    dims = [su2.weyl_dimension(l) / l**3 for l in ls]
    meta = {"study": "weyl", "measured": "dim / l^3", "reference": "8/3"}
    return Outcome(report=ConvergenceReport.from_measurements(ls, dims, 8.0 / 3.0, meta))


def _run_vn_dirac(p):
    a, b = parse_su2_polynomial(p["a"]), parse_su2_polynomial(p["b"])
    r = su2.check_vn_dirac_su2(a, b, _load_domain(p), p["t"], p["hbar"])
    return Outcome(report=r, summary=f"thick_warning={r.metadata['thick_warning']}")


def _run_sep_ball(p):
    return Outcome(report=su2.check_separability_ball(p["a2"], p["b2"], p["l"]))


def _run_positivity(p):
    f = parse_su2_polynomial(p["f"])
    r = su2.positivity_check(_load_domain(p), f, p["hbar"], seed=p["seed"])
    return Outcome(report=r, summary=f"min_eigenvalues={r.metadata['min_eigenvalues']}")


_N_DEFAULT = "4,8,...,1024"
_HBAR_DEFAULT = "0.1,0.05,...,0.003125"

SUBCOMMANDS: dict = {}


def _register(name, help, params, runner):
    SUBCOMMANDS[name] = Subcommand(name, help, tuple(params), runner)


_register("cylinder-separability", "normalized Frobenius norm of Q(a) against the classical L2 norm", [
    Param("observable", "str", "x", "observable over x, z, zbar"),
    Param("L", "float", 1.0, "length of the position interval"),
    Param("M", "float", TWO_PI, "circumference of the momentum circle"),
    Param("N", "ints", _N_DEFAULT, "state counts, e.g. 4,8,...,1024"),
], _run_cyl_sep)
_register("cylinder-vonneumann", "product defect ||Q(a)Q(b) - Q(ab)||_N", [
    Param("a", "str", "x*z"), Param("b", "str", "x"),
    Param("L", "float", 1.0), Param("M", "float", TWO_PI), Param("N", "ints", _N_DEFAULT),
], _run_cyl_vn)
_register("cylinder-dirac", "commutator defect on bulk states", [
    Param("a", "str", "x^2*z"), Param("b", "str", "x*zbar"),
    Param("l", "int", -1, "bulk margin; negative means the largest Laurent index"),
    Param("L", "float", 1.0), Param("M", "float", TWO_PI), Param("N", "ints", _N_DEFAULT),
], _run_cyl_dirac)
_register("cylinder-prop2", "product and commutator defects on a fixed state for position space [u, v]", [
    Param("a", "str", "x*z"), Param("b", "str", "x"),
    Param("u", "float", -1.0), Param("v", "float", 1.0), Param("M", "float", TWO_PI),
    Param("N", "ints", _N_DEFAULT),
    Param("psi_center", "float", 0.0, "center of the Gaussian coefficients c_k"),
    Param("psi_width", "float", 3.0, "width of the Gaussian coefficients in k"),
], _run_cyl_prop2)
_register("supertunnel-two-state", "two-state transition probability against propagation", [
    Param("H0", "float", 1.0), Param("Hn", "float", 0.5), Param("hbar", "float", 1.0),
    Param("n", "int", 1), Param("points", "int", dynamics.DEFAULT_T_POINTS),
    Param("tmax", "float", 0.0, "end of the time grid; 0 means one period 2 pi / omega"),
    Param("trace", "bool", False, "write t,probability instead of a report"),
], _run_two_state)
_register("supertunnel-line", "hopping probabilities on a long chain against J_n(t omega)^2", [
    Param("E", "float", 1.0), Param("t", "float", 20.0), Param("sites", "int", 1601),
    Param("nmax", "int", 10), Param("hbar", "float", 1.0),
    Param("n", "int", 1, "site for --trace"), Param("points", "int", 101, "time points for --trace"),
    Param("trace", "bool", False, "write t,probability for site n instead of a report"),
], _run_line)
_register("supertunnel-decompactify", "peak transition probability across a gap as M grows", [
    Param("gap", "float", 1.0, "width of the forbidden region"),
    Param("M", "floats", "6.283185307179586,12.566370614359172,...,201.06192982974676"),
    Param("hbar", "float", 1.0), Param("mass", "float", 1.0),
    Param("tmax", "float", 0.0, "end of the time grid; 0 uses the default grid"),
    Param("points", "int", dynamics.DEFAULT_T_POINTS),
], _run_decompactify)
_register("fermi", "ground-state energy and pressures of the Fermi gas", [
    Param("N", "int", 100, "number of single-particle states"),
    Param("fermions", "ints", [], "fermion counts; default N"),
    Param("L", "float", 1.0), Param("mass", "float", 1.0), Param("hbar", "float", 1.0),
    Param("table", "bool", False, "use the half-state box of the pressure table"),
], _run_fermi)
_register("fermi-pressure", "finite-difference pressure against the semiclassical or dilute law", [
    Param("N", "int", 100), Param("fermions", "ints", "1,2,...,64"),
    Param("L", "float", 1.0), Param("mass", "float", 1.0), Param("hbar", "float", 1.0),
    Param("reference", "str", "semiclassical", "semiclassical or dilute"),
], _run_fermi_pressure)
_DOMAIN_PARAMS = [
    Param("R2", "float", 1.0, "squared radius of the ball or cap"),
    Param("h", "float", float("nan"), "cap height; omit for a ball"),
    Param("domain", "str", "", "domain JSON text or file path"),
]
_register("su2-domain-dim", "hbar^3 times the domain dimension against 2 Vol / pi", [
    *_DOMAIN_PARAMS[:1], Param("h", "float", 0.0, "cap height; nan for a ball"), _DOMAIN_PARAMS[2],
    Param("hbar", "floats", _HBAR_DEFAULT),
], _run_domain_dim)
_register("su2-cap-count", "exact number of cap states against the closed-form count", [
    Param("s2", "int", None, "twice the top spin"), Param("m2", "int", None, "twice the weight threshold"),
], _run_cap_count)
_register("su2-thickness", "bulk fraction of the cap states", [
    Param("R", "float", 1.0), Param("h", "float", 0.0), Param("t", "float", 2.0),
    Param("hbar", "floats", _HBAR_DEFAULT),
], _run_thickness)
_register("su2-weyl", "dimension of F_l over l^3 against 8/3", [
    Param("l", "floats", "10,20,...,160"),
], _run_weyl)
_register("su2-vn-dirac", "von Neumann and Dirac defects on a domain", [
    Param("a", "str", "x1"), Param("b", "str", "x2"),
    _DOMAIN_PARAMS[0], Param("h", "float", 0.0, "cap height; nan for a ball"), _DOMAIN_PARAMS[2],
    Param("t", "float", 1.0), Param("hbar", "floats", "0.1,0.05,...,0.00625"),
], _run_vn_dirac)
_register("su2-separability-ball", "mean square of a spin-1/2 matrix element on the ball", [
    Param("a2", "int", 1), Param("b2", "int", 1), Param("l", "floats", "10,20,40"),
], _run_sep_ball)
_register("su2-positivity", "smallest eigenvalue of Q^D(f) for f positive on the domain", [
    Param("f", "str", "1.1 - x1^2"), *_DOMAIN_PARAMS,
    Param("hbar", "floats", "0.2,0.1,0.05,0.025"), Param("seed", "int", 0),
], _run_positivity)


def list_subcommands() -> str:
    width = max(len(n) for n in SUBCOMMANDS)
    return "\n".join(f"{n.ljust(width)}  {s.help}" for n, s in SUBCOMMANDS.items()) + "\n"


# ---------------------------------------------------------------- driver


def _write_atomic(path: str, text: str, overwrite: bool) -> None:
    if os.path.exists(path) and not overwrite:
        raise ArgumentError(f"{path} exists; pass --overwrite to replace it")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".compactq-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_params(subcommand: str, file_values: dict, flag_values: dict) -> dict:
    """Schema defaults, overridden by config-file values, overridden by flags."""
    schema = {p.name: p for p in SUBCOMMANDS[subcommand].params}
    unknown = sorted(set(file_values) - set(schema))
    if unknown:
        raise ArgumentError(f"unknown keys for {subcommand}: {unknown}")
    merged = {}
    for name, p in schema.items():
        value = p.default
        if name in file_values:
            value = file_values[name]
        if flag_values.get(name) is not None:
            value = flag_values[name]
        merged[name] = None if value is None else p.convert(value)
    return merged


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one resolved invocation and return its exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        config.validate()
        outcome = SUBCOMMANDS[config.subcommand].runner(config.params)
        text = outcome.render(config.format)
        summary = f"{config.subcommand}: "
        if outcome.report is not None:
            summary += _summary_of(outcome.report)
            if outcome.summary:
                summary += " "
        summary += outcome.summary
        if config.output == "-":
            stdout.write(text)
            print(summary, file=stderr)
        else:
            if config.output:
                _write_atomic(config.output, text, config.overwrite)
            print(summary, file=stdout)
    except IterationError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_ASSERT
    except (CompactQError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    if config.assert_residual is not None:
        res = outcome.final_residual()
        if not res <= config.assert_residual:
            print(f"assertion failed: final residual {res!r} > {config.assert_residual!r}", file=stderr)
            return EXIT_ASSERT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compactq", description="Quantization with compact momentum space.")
    parser.add_argument("--list", action="store_true", help="list the subcommands and exit")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name, cmd in SUBCOMMANDS.items():
        sp_ = sub.add_parser(name, help=cmd.help, description=cmd.help)
        for p in cmd.params:
            flag = "--" + p.name
            if p.kind == "bool":
                sp_.add_argument(flag, action="store_const", const=True, default=None, help=p.help)
            else:
                default = "required" if p.required else p.default
                sp_.add_argument(flag, default=None, help=f"{p.help} (default: {default})".strip())
        sp_.add_argument("--config", help="JSON file with parameter values; flags override it")
        sp_.add_argument("--output", help="report path, or - for standard output")
        sp_.add_argument("--format", choices=("csv", "json"), default=None)
        sp_.add_argument("--overwrite", action="store_const", const=True, default=None)
        sp_.add_argument("--assert-residual", type=float, default=None,
                         help="exit 3 if the final residual exceeds this value")
    return parser


_DRIVER_KEYS = ("output", "format", "overwrite", "assert_residual", "subcommand")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    name = ns.subcommand
    file_values: dict = {}
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            try:
                file_values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ArgumentError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ArgumentError("config must be a JSON object")
    driver = {k: file_values.pop(k) for k in _DRIVER_KEYS if k in file_values}
    if driver.get("subcommand", name) != name:
        raise ArgumentError(f"config is for {driver['subcommand']!r}, not {name!r}")
    flags = {p.name: getattr(ns, p.name) for p in SUBCOMMANDS[name].params}
    params = resolve_params(name, file_values, flags)

    def pick(key, default):
        v = getattr(ns, key)
        return v if v is not None else driver.get(key, default)

    return RunConfig(name, params, pick("output", None), pick("format", "csv"), bool(pick("overwrite", False)),
                     pick("assert_residual", None))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.list:
        sys.stdout.write(list_subcommands())
        return EXIT_OK
    if not ns.subcommand:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        config = config_from_args(ns)
    except (CompactQError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
