"""Scenario runner: ``qrf <scenario> [--config FILE] [--out DIR] [--param k=v ...]``.

Each run writes ``report.json`` plus CSV data files into the output
directory. The exit status is 0 only when every verdict passes; failing
labels are listed on stderr.
"""
from __future__ import annotations

import argparse
import cmath
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import canon, frames, gausscalc, gridsim
from .canon import MassList, to_fraction
from .gausscalc import QuadForm

SCENARIOS = ("boost-demo", "paradox", "gamma-check", "nogo", "nparticle-table",
             "relative-reduced", "castro-check")


class ConfigError(ValueError):
    pass


# -- parameter schemas ---------------------------------------------------------

def _rational(v) -> Fraction:
    return to_fraction(v)


def _real(v) -> float:
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _integer(v) -> int:
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ValueError("expected an integer")
    return int(v)


def _split(v):
    if isinstance(v, str):
        return [x for x in v.replace(" ", "").split(",") if x]
    return list(v)


def _rational_list(v) -> list[Fraction]:
    return [to_fraction(x) for x in _split(v)]


def _real_list(v) -> list[float]:
    return [float(x) for x in _split(v)]


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ValueError(f"expected one of {options}")
        return v
    return parse


SCHEMAS = {
    "boost-demo": {"x": (_real, 2.0), "v": (_real, 1.0), "t": (_real, 3.0),
                   "m": (_rational, "1"), "sigma": (_real, 1.0), "n": (_integer, 512)},
    "paradox": {"m0": (_rational, "1"), "m1": (_rational, "1"), "d": (_real, 4.0),
                "phi": (_real, math.pi / 3), "sigma0": (_real, 0.1), "sigma1": (_real, 0.1),
                "n": (_integer, 512), "width_scales": (_real_list, "1,10,20")},
    "gamma-check": {"trials": (_integer, 20), "samples": (_integer, 41),
                    "span": (_real, 4.0)},
    "nogo": {"masses": (_rational_list, "1,1,1"), "ratios": (_rational_list, "1,1/10,1/100"),
             "completion": (_choice("total", "single"), "total")},
    "nparticle-table": {"masses": (_rational_list, "1,1,1")},
    "relative-reduced": {"masses": (_rational_list, "1,1,1"), "j": (_integer, 1),
                         "n": (_integer, 64), "sigma": (_real, 0.3), "sep": (_real, 2.0)},
    "castro-check": {"masses": (_rational_list, "1,1,1,1")},
}
COMMON = {"hbar": (_real, 1.0)}


@dataclass
class ScenarioConfig:
    scenario: str
    params: dict
    output_dir: Path
    seed: int = 0

    @classmethod
    def build(cls, scenario: str, raw: dict, output_dir, seed: int = 0) -> "ScenarioConfig":
        if scenario not in SCHEMAS:
            raise ConfigError(f"unknown scenario {scenario!r}")
        schema = {**COMMON, **SCHEMAS[scenario]}
        unknown = sorted(set(raw) - set(schema))
        if unknown:
            raise ConfigError(f"unknown parameters for {scenario}: {', '.join(unknown)}")
        params = {}
        for key, (parse, default) in schema.items():
            value = raw.get(key, default)
            try:
                params[key] = parse(value)
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from None
        if params["hbar"] <= 0:
            raise ConfigError("hbar must be positive")
        return cls(scenario, params, Path(output_dir), int(seed))

    def echo(self) -> dict:
        def fmt(v):
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, list):
                return [fmt(x) for x in v]
            return v
        return {k: fmt(v) for k, v in self.params.items()}


@dataclass
class Result:
    label: str
    value: object
    tolerance: object
    passed: bool
    target: object = None

    def to_json(self) -> dict:
        return {"label": self.label, "value": _jsonable(self.value),
                "target": _jsonable(self.target), "tolerance": _jsonable(self.tolerance),
                "verdict": "pass" if self.passed else "fail"}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class ScenarioReport:
    scenario: str
    inputs: dict
    results: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def close(self, label, value, target, tol):
        self.results.append(Result(label, value, tol, abs(value - target) <= tol, target))

    def at_most(self, label, value, bound):
        self.results.append(Result(label, value, f"<= {bound}", value <= bound))

    def at_least(self, label, value, bound):
        self.results.append(Result(label, value, f">= {bound}", value >= bound))

    def exact(self, label, value, target):
        self.results.append(Result(label, value, "exact", value == target, target))

    def flag(self, label, ok: bool, value=None):
        self.results.append(Result(label, ok if value is None else value, "exact", bool(ok)))

    @property
    def failures(self) -> list[str]:
        return [r.label for r in self.results if not r.passed]

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "inputs": self.inputs,
                "results": [r.to_json() for r in self.results],
                "artifacts": self.artifacts, "notes": self.notes,
                "passed": not self.failures}


class _Writer:
    def __init__(self, config: ScenarioConfig, report: ScenarioReport):
        self.dir = config.output_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.report = report

    def path(self, name: str) -> Path:
        self.report.artifacts.append(name)
        return self.dir / name

    def table(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(x) for x in row])


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


# -- scenarios -----------------------------------------------------------------

def run_boost_demo(config: ScenarioConfig) -> ScenarioReport:
    p = config.params
    rep = ScenarioReport(config.scenario, config.echo())
    out = _Writer(config, rep)
    x, v, t, m = p["x"], p["v"], p["t"], p["m"]
    state = gausscalc.make_packet(x, p["sigma"], hbar=p["hbar"], mass=m)
    tr = frames.boost(v, t, [m])
    X = QuadForm.variable(1, 0)
    passive = frames.passive_expect(tr, X, state).real
    inv = frames.invariance_check(tr, X, state)
    rep.close("passive <X>' = <X> - vt", passive, x - v * t, 1e-9)
    rep.close("primed sandwich <psi'|X'|psi'> = <X>", inv.primed_value.real, x, 1e-9)
    rep.close("prescriptions differ by vt", inv.primed_value.real - passive, v * t, 1e-9)
    # active state sampled on a grid
    moved = frames.active_state(tr, state)
    grid = gridsim.sample(moved, gridsim.auto_grids(moved, p["n"]))
    rep.close("grid <X> of boosted state", gridsim.expect_position(grid, 0), x - v * t, 1e-6)
    rep.close("grid <P> of boosted state", gridsim.expect_momentum(grid, 0),
              -float(m) * v, 1e-6)
    grid.write_slice_csv(out.path("boosted_state.csv"), 0)
    return rep


def _picture_rows(name, st):
    for i, term in enumerate(st.terms):
        yield [name, i, term.coeff.real, term.coeff.imag, *term.center]


def _phase_error(z: complex, phi: float) -> tuple[float, int]:
    ang = cmath.phase(z)
    errs = {s: abs((ang - s * phi + math.pi) % (2 * math.pi) - math.pi) for s in (1, -1)}
    sign = min(errs, key=errs.get)
    return errs[sign], sign


def _paradox_states(p, scale=1.0):
    ds = gausscalc.decay_state(p["d"], p["phi"], p["m0"], p["m1"],
                               scale * p["sigma0"], scale * p["sigma1"], p["hbar"])
    cm = gausscalc.apply_point_map(ds, canon.map_cm_r(p["m0"], p["m1"]))
    rel = gausscalc.apply_point_map(ds, canon.map_R(p["m0"], p["m1"]))
    return ds, cm, rel


def _reduced(st, n, shift):
    grid = gridsim.sample(st, gridsim.auto_grids(st, n, [0.0, shift]))
    return grid, gridsim.partial_trace(grid, 1)


def run_paradox(config: ScenarioConfig) -> ScenarioReport:
    p = config.params
    rep = ScenarioReport(config.scenario, config.echo())
    out = _Writer(config, rep)
    d, phi, n = p["d"], p["phi"], p["n"]
    ds, cm, rel = _paradox_states(p)
    out.table("centers.csv", ["picture", "term", "coeff_re", "coeff_im", "center_0", "center_1"],
              [*_picture_rows("lab", ds), *_picture_rows("cm_r", cm), *_picture_rows("R", rel)])
    x = d * float(p["m1"] / (p["m0"] + p["m1"]))
    rep.close("lab centre of mass", gausscalc.expect_quadratic(
        ds, QuadForm.linear([float(p["m0"] / (p["m0"] + p["m1"])), 0,
                             float(p["m1"] / (p["m0"] + p["m1"])), 0])).real, 0.0, 1e-6)
    rep.close("cm_r centre of mass packet", float(cm.terms[0].center[0]), 0.0, 1e-9)
    rep.close("R branch S-centre", float(rel.terms[1].center[0]), x, 1e-9)
    Xr = QuadForm.variable(2, 2)
    grids = {}
    for name, st in (("cm_r", cm), ("R", rel)):
        rep.close(f"<X_r> analytic [{name}]", gausscalc.expect_quadratic(st, Xr).real, 0.0, 1e-6)
        grid, rho = _reduced(st, n, 2 * d)
        grids[name] = (grid, rho)
        rep.close(f"<X_r> grid [{name}]", gridsim.expect_position(grid, 1), 0.0, 1e-6)
        grid.write_slice_csv(out.path(f"amp_{name}_rel.csv"), 1)
        rho.write_csv(out.path(f"rho_{name}.csv"))
    s_cm = gridsim.density_shift_expect(grids["cm_r"][1], 2 * d)
    s_r = gridsim.density_shift_expect(grids["R"][1], 2 * d)
    rep.close("|shift(2d)| reduced [cm_r]", abs(s_cm), 0.5, 1e-3)
    err, sign = _phase_error(s_cm, phi)
    rep.at_most("phase error of shift(2d) vs +-phi [cm_r]", err, 1e-3)
    rep.notes.append(f"shift phase matches {'+' if sign > 0 else '-'}phi under the "
                     "convention exp(-iLP/hbar): psi(u) -> psi(u+L)")
    rep.at_most("|shift(2d)| reduced [R]", abs(s_r), 1e-3)
    rep.close("shift(2d) analytic vs reduced [cm_r]",
              abs(gausscalc.expect_shift(cm, 1, 2 * d) - s_cm), 0.0, 1e-6)
    pur_cm = grids["cm_r"][1].purity()
    pur_r = grids["R"][1].purity()
    rep.at_least("purity [cm_r]", pur_cm, 0.99)
    predicted = 0.5 * gausscalc.reduced_purity(rel.terms[0], 1)
    rep.close("purity [R] vs crossing-term prediction", pur_r, predicted, 0.01)
    rep.notes.append(f"relational purity {pur_r:.6f}; the ideal incoherent mixture value 0.5 "
                     f"is reached only when sigma0 << sigma1 (branch purity "
                     f"{2 * predicted:.6f})")
    # purity against packet width
    rows, gaps = [], []
    for scale in p["width_scales"]:
        _, cm_s, rel_s = _paradox_states(p, scale)
        pc = _reduced(cm_s, n, 2 * d)[1].purity()
        pr = _reduced(rel_s, n, 2 * d)[1].purity()
        rows.append([scale * p["sigma1"] / d, pc, pr, pc - pr])
        gaps.append(pc - pr)
    out.table("purity_vs_width.csv", ["sigma1_over_d", "purity_cm_r", "purity_R", "gap"], rows)
    if len(gaps) > 1:
        rep.flag("purity gap closes as sigma/d grows",
                 all(b < a for a, b in zip(gaps, gaps[1:])), [float(g) for g in gaps])
    return rep


def run_gamma_check(config: ScenarioConfig) -> ScenarioReport:
    p = config.params
    rep = ScenarioReport(config.scenario, config.echo())
    out = _Writer(config, rep)
    rng = np.random.default_rng(config.seed)
    rows, worst = [], 0.0
    for trial in range(p["trials"]):
        a, b = rng.uniform(-2, 2, size=2)
        s0, s1 = rng.uniform(0.2, 1.5, size=2)
        u = np.linspace(-a - p["span"] * s0, -a + p["span"] * s0, p["samples"])
        v = np.linspace(b - a - p["span"] * s1, b - a + p["span"] * s1, p["samples"])
        pts = np.array([(ui, vi) for ui in u for vi in v])
        chk = gausscalc.gamma_factorization_check(a, b, s0, s1, pts)
        worst = max(worst, chk.max_rel_error)
        rows.append([trial, a, b, s0, s1, chk.sigma_s, chk.norm_constant, chk.max_rel_error])
    out.table("gamma_check.csv", ["trial", "a", "b", "sigma0", "sigma1", "sigma_S",
                                  "norm_constant", "max_rel_error"], rows)
    rep.at_most("max relative factorization error", worst, 1e-12)
    rep.close("sigma_S(s, s) = s / sqrt(2)", gausscalc.sigma_s(0.7, 0.7), 0.7 / math.sqrt(2), 1e-15)
    rep.close("sigma_S(3, 4) = 12/5", gausscalc.sigma_s(3.0, 4.0), 2.4, 1e-15)
    return rep


def _closed_form_ok(ms: MassList, table) -> bool:
    m0 = ms[0]
    for i in range(1, ms.n):
        for j in range(1, ms.n):
            want = (ms[j] + (m0 if i == j else 0)) / (ms[j] + m0)
            if table[2 * i, 2 * j + 1] != want:
                return False
    return True


def run_nogo(config: ScenarioConfig) -> ScenarioReport:
    p = config.params
    rep = ScenarioReport(config.scenario, config.echo())
    out = _Writer(config, rep)
    ms = MassList(p["masses"])
    if ms.n < 2:
        raise ConfigError("nogo needs at least two masses")
    cert = canon.nogo_certificate(ms, p["completion"])
    table = canon.commutator_table(canon.target_relational_map(ms, p["completion"]))
    labels = [f"{k}{i}'" for i in range(ms.n) for k in "XP"]
    out.table("deviation.csv", ["", *labels],
              [[labels[i], *row] for i, row in enumerate(cert.deviation.to_json())])
    rep.flag("bracket closed form (m_j + m0 delta_ij)/(m_j + m0)", _closed_form_ok(ms, table))
    rep.exact("relative block canonical", cert.relative_canonical, ms.n == 2)
    rep.exact("max deviation entry", cert.max_entry,
              max(ms[j] / (ms[j] + ms[0]) for j in range(1, ms.n))
              if p["completion"] == "total" else cert.max_entry)
    n2 = canon.nogo_certificate(MassList(ms.masses[:2]), p["completion"])
    rep.flag("N=2 relative block canonical", n2.relative_canonical)
    for comp in ("total", "single"):
        other = canon.nogo_certificate(ms, comp)
        rep.notes.append(f"completion {comp}: max deviation {other.max_entry}, "
                         f"relative-block max {other.relative_max}, "
                         f"full map canonical {other.canonical}")
    sweep = canon.mass_limit_sweep(ms, p["ratios"], p["completion"])
    closed = [max(r * ms[j] / (r * ms[j] + ms[0]) for j in range(1, ms.n)) for r in p["ratios"]]
    out.table("mass_limit_sweep.csv", ["ratio", "max_deviation", "closed_form", "float"],
              [[r, s, c, float(s)] for r, s, c in zip(p["ratios"], sweep, closed)])
    if p["completion"] == "total":
        rep.exact("sweep matches r m_j/(r m_j + m0)", sweep, closed)
    rep.flag("sweep strictly decreasing", all(b < a for a, b in zip(sweep, sweep[1:])))
    with open(out.path("certificate.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(cert.to_json(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return rep


def _map_rows(phase_map):
    labels = [f"{k}{i}" for i in range(phase_map.dim) for k in "XP"]
    return labels, [[f"{lab}'", *row] for lab, row in
                    zip(labels, phase_map.to_json()["matrix"])]


def run_nparticle_table(config: ScenarioConfig) -> ScenarioReport:
    p = config.params
    rep = ScenarioReport(config.scenario, config.echo())
    out = _Writer(config, rep)
    ms = MassList(p["masses"])
    if ms.n < 2:
        raise ConfigError("nparticle-table needs at least two masses")
    phase_map = canon.map_cm_r_N(ms)
    labels, rows = _map_rows(phase_map)
    out.table("cm_r_N_table.csv", ["", *labels], rows)
    tot = ms.total
    ok = True
    for i in range(1, ms.n):
        want = [Fraction(0)] * (2 * ms.n)
        for k in range(ms.n):
            want[2 * k + 1] = (1 if k == i else 0) - ms[i] / tot
        ok &= list(phase_map.row(2 * i + 1)) == want
    rep.flag("P_i' = m_i (P_i/m_i - P_CM/M)", ok)
    rep.flag("X_0' = sum m_k X_k / M",
             list(phase_map.row(0)) == [ms[k // 2] / tot if k % 2 == 0 else 0
                                        for k in range(2 * ms.n)])
    rep.flag("canonical", canon.is_canonical(phase_map))
    two = canon.map_cm_r_N(ms.masses[:2]).matrix == canon.map_cm_r(ms[0], ms[1]).matrix
    rep.flag("N=2 reduces to the two-body map", two)
    return rep


def _palliative_states(p, ms: MassList):
    # built in (pair CM, r_j, other) coordinates, then mapped back to the lab
    j, s, a = p["j"], p["sigma"], p["sep"]
    other = 3 - j
    back = canon.map_cm_r_pair(ms, j).inverse()
    widths = [s, s, s]
    factor = gausscalc.product_packet([0.0, 0.0, 0.0], widths, hbar=p["hbar"], masses=ms)
    plus, minus = [0.0] * 3, [0.0] * 3
    plus[j], plus[other] = a, a
    minus[j], minus[other] = -a, -a
    r2 = 1 / math.sqrt(2)
    ent = gausscalc.GaussState([gausscalc.GaussianTerm.diagonal(r2, plus, widths),
                                gausscalc.GaussianTerm.diagonal(r2, minus, widths)],
                               p["hbar"], ms)
    return (gausscalc.apply_point_map(factor, back).normalized(),
            gausscalc.apply_point_map(ent, back).normalized())


def run_relative_reduced(config: ScenarioConfig) -> ScenarioReport:
    p = config.params
    rep = ScenarioReport(config.scenario, config.echo())
    out = _Writer(config, rep)
    ms = MassList(p["masses"])
    if ms.n != 3:
        raise ConfigError("relative-reduced runs on three particles")
    if not 1 <= p["j"] < ms.n:
        raise ConfigError("j must be 1 or 2")
    factor, ent = _palliative_states(p, ms)
    rho_f = gridsim.relative_reduced_state(factor, p["j"], p["n"])
    rho_e = gridsim.relative_reduced_state(ent, p["j"], p["n"])
    rep.close("purity rho_r_j [factorized]", rho_f.purity(), 1.0, 1e-3)
    rep.at_most("purity rho_r_j [entangled]", rho_e.purity(), 0.9)
    rho_f.write_csv(out.path("rho_rj_factorized.csv"))
    rho_e.write_csv(out.path("rho_rj_entangled.csv"))
    return rep


def run_castro_check(config: ScenarioConfig) -> ScenarioReport:
    p = config.params
    rep = ScenarioReport(config.scenario, config.echo())
    out = _Writer(config, rep)
    ms = MassList(p["masses"])
    if ms.n < 3:
        raise ConfigError("castro-check needs at least three masses")
    phase_map = canon.map_castro(ms)
    table = canon.commutator_table(phase_map)
    labels, rows = _map_rows(phase_map)
    out.table("castro_map.csv", ["", *labels], rows)
    out.table("castro_commutators.csv", ["", *labels],
              [[f"{lab}'", *row] for lab, row in zip(labels, table.to_json())])
    sub = list(range(2, ms.n))
    rep.flag("subsystem block canonical", canon.is_canonical(phase_map, sub))
    rep.exact("full map canonical", canon.is_canonical(phase_map), False)
    return rep


RUNNERS = {
    "boost-demo": run_boost_demo,
    "paradox": run_paradox,
    "gamma-check": run_gamma_check,
    "nogo": run_nogo,
    "nparticle-table": run_nparticle_table,
    "relative-reduced": run_relative_reduced,
    "castro-check": run_castro_check,
}


def _read_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    return data


def _parse_param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def make_config(scenario: str, config_path=None, out=None, params=(), env=None) -> ScenarioConfig:
    env = os.environ if env is None else env
    raw = _read_config(config_path)
    listed = raw.pop("scenario", scenario)
    if listed != scenario:
        raise ConfigError(f"config is for {listed!r}, not {scenario!r}")
    output_dir = raw.pop("output_dir", "qrf_out")
    seed = raw.pop("seed", 0)
    for item in params:
        key, value = _parse_param(item)
        if key == "seed":
            seed = value
        else:
            raw[key] = value
    if env.get("QRF_OUT"):
        output_dir = env["QRF_OUT"]
    if out is not None:
        output_dir = out
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    return ScenarioConfig.build(scenario, raw, output_dir, seed)


def run(config: ScenarioConfig) -> ScenarioReport:
    report = RUNNERS[config.scenario](config)
    report.artifacts.append("report.json")
    config.output_dir.mkdir(parents=True, exist_ok=True)
    with open(config.output_dir / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_json(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qrf", description=__doc__.splitlines()[0])
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", help="flat JSON file with scenario parameters")
    parser.add_argument("--out", help="output directory (overrides QRF_OUT and the config)")
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="override a single parameter; repeatable")
    args = parser.parse_args(argv)
    try:
        config = make_config(args.scenario, args.config, args.out, args.param)
        report = run(config)
    except (ConfigError, gridsim.BoxError, ValueError) as exc:
        print(f"qrf {args.scenario}: {exc}", file=sys.stderr)
        return 2
    for r in report.results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.label}: {_jsonable(r.value)}")
    if report.failures:
        print("failing checks: " + "; ".join(report.failures), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
