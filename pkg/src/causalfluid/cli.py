"""Command-line entry points.

Usage::

    causalfluid check       --config run.ini
    causalfluid equivalence --config run.ini --seed 1 --out results/
    causalfluid entropy     --config run.ini
    causalfluid simulate    --config run.ini --out results/ --format json-lines
    causalfluid sweep       --config run.ini

Exit codes: 0 pass, 1 physics or verification failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coefficients import (
    CausalityStatus,
    CoefficientError,
    DissipationCoeffs,
    causality_status,
    chi_star,
    derive_coefficients,
)
from .dissipation import assemble_b_tensor
from .entropy import ansatz_production, delta_q_order, new_model_entropy_sign, sample_random_gradients
from .equivalence import (
    chain_shifts,
    eckart_ansatz,
    first_order_residual,
    landau_ansatz,
    run_chain,
    run_chain_steps,
    zeta3_conformance,
)
from .hyperbolicity import DegenerateDiffusion, causality_certificate, signal_speeds
from .kinematics import FluidState, KinematicsError
from .solver1d import ConfigError, Perturbation, RunConfig, SolverError, run_decay, run_front_speed
from .thermo import GasParams, ThermoDomainError, eos_from_n_theta

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SLOPE_TOL = 0.1

# section -> key -> (kind, default); kind "float", "int", "str", "floats", "bool"
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "gas": {"m": ("float", 1.0), "gamma": ("float", 4.0 / 3.0), "s0": ("float", 0.0)},
    "coefficients": {
        "eta": ("float", 1.0),
        "zeta": ("float", 0.0),
        "chi": ("float", None),
        "chi_factor": ("float", None),
        "mu": ("float", 0.1),
    },
    "state": {
        "n": ("float", 1.0),
        "theta": ("float", 1.0),
        "vx": ("float", 0.0),
        "vy": ("float", 0.0),
        "vz": ("float", 0.0),
    },
    "run": {"seed": ("int", 0)},
    "check": {"directions": ("int", 20)},
    "equivalence": {
        "samples": ("int", 200),
        "scales": ("floats", (1e-1, 1e-2, 1e-3, 1e-4)),
        "zeta3_factor": ("float", 1.0),
    },
    "entropy": {
        "samples": ("int", 10_000),
        "eps": ("float", 1e-3),
        "shift_samples": ("int", 200),
    },
    "simulate": {
        "scenario": ("str", "decay"),
        "nx": ("int", 256),
        "length": ("float", 10.0),
        "cfl": ("float", 0.5),
        "t_end": ("float", 20.0),
        "output_stride": ("int", 10),
        "amplitude": ("float", 1e-3),
        "shape": ("str", "mode"),
        "mode": ("int", 1),
        "width": ("float", 1.0),
        "weights": ("floats", (1.0, 1.0, 0.0, 0.0, 1.0)),
        "filter": ("float", 1e-3),
        "snapshots": ("bool", False),
        "threshold": ("float", 1e-9),
    },
    "sweep": {
        "chi_factor_min": ("float", 0.25),
        "chi_factor_max": ("float", 2.0),
        "points": ("int", 8),
        "spectral": ("bool", True),
    },
}

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class ConfigValidationError(ValueError):
    pass


def _line_map(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            lines[(section, "")] = no
        elif section is not None:
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            lines[(section, key)] = no
    return lines


def _convert(kind: str, raw: str, where: str):
    raw = raw.strip()
    if kind == "float":
        if not _NUMBER.match(raw):
            raise ConfigValidationError(f"{where}: expected a decimal number, got {raw!r}")
        return float(raw)
    if kind == "int":
        if not re.match(r"^[+-]?\d+$", raw):
            raise ConfigValidationError(f"{where}: expected an integer, got {raw!r}")
        return int(raw)
    if kind == "floats":
        parts = [p for p in re.split(r"[,\s]+", raw) if p]
        for p in parts:
            if not _NUMBER.match(p):
                raise ConfigValidationError(f"{where}: expected numbers, got {p!r}")
        return tuple(float(p) for p in parts)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigValidationError(f"{where}: expected a boolean, got {raw!r}")
    return raw


@dataclass
class Config:
    values: dict[str, dict[str, object]]
    lines: dict[tuple[str, str], int] = field(default_factory=dict)
    source: str = "<defaults>"

    def get(self, section: str, key: str):
        return self.values[section][key]

    def where(self, section: str, key: str) -> str:
        no = self.lines.get((section, key))
        return f"{self.source}:{no}: [{section}] {key}" if no else f"[{section}] {key}"

    @classmethod
    def defaults(cls) -> "Config":
        return cls({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})

    @classmethod
    def from_text(cls, text: str, source: str = "<string>") -> "Config":
        cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigValidationError(str(exc)) from None
        cfg = cls.defaults()
        cfg.lines = _line_map(text)
        cfg.source = source
        for section in cp.sections():
            if section not in SCHEMA:
                no = cfg.lines.get((section, ""))
                raise ConfigValidationError(f"{source}:{no}: unknown section [{section}]")
            for key, raw in cp.items(section):
                if key not in SCHEMA[section]:
                    no = cfg.lines.get((section, key))
                    raise ConfigValidationError(f"{source}:{no}: unknown key {key!r} in [{section}]")
                kind = SCHEMA[section][key][0]
                cfg.values[section][key] = _convert(kind, raw, cfg.where(section, key))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "Config":
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigValidationError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, source=str(p))

    # -- validation of module preconditions ---------------------------------

    def _fail(self, section, key, msg):
        raise ConfigValidationError(f"{self.where(section, key)}: {msg}")

    def validate(self) -> None:
        try:
            self.params()
        except ThermoDomainError as exc:
            self._fail("gas", "gamma", str(exc))
        for key in ("n", "theta"):
            if not self.get("state", key) > 0:
                self._fail("state", key, "must be positive")
        v = np.array([self.get("state", k) for k in ("vx", "vy", "vz")])
        if v @ v >= 1.0:
            self._fail("state", "vx", "background velocity must be subluminal")
        for key in ("eta", "zeta", "mu", "chi", "chi_factor"):
            val = self.get("coefficients", key)
            if val is not None and not (math.isfinite(val) and val >= 0):
                self._fail("coefficients", key, "must be finite and non-negative")
        if self.get("coefficients", "chi") is not None and self.get("coefficients", "chi_factor") is not None:
            self._fail("coefficients", "chi_factor", "give either chi or chi_factor, not both")
        if self.get("coefficients", "chi_factor") is not None and not self.get("coefficients", "eta") > 0:
            self._fail("coefficients", "eta", "chi_factor needs eta > 0")
        try:
            derive_coefficients(self.params(), self.thermo(), self.coeffs())
        except CoefficientError as exc:
            self._fail("coefficients", "eta", str(exc))
        if self.get("check", "directions") < 1:
            self._fail("check", "directions", "must be at least 1")
        scales = self.get("equivalence", "scales")
        if len(scales) < 2 or any(b >= a for a, b in zip(scales, scales[1:])) or min(scales) <= 0:
            self._fail("equivalence", "scales", "need at least two positive, strictly decreasing scales")
        for sec in ("equivalence", "entropy"):
            if self.get(sec, "samples") < 1:
                self._fail(sec, "samples", "must be at least 1")
        if not 0 < self.get("entropy", "eps") <= 1e-2:
            self._fail("entropy", "eps", "must lie in (0, 1e-2]")
        sim = self.values["simulate"]
        if sim["scenario"] not in ("decay", "front"):
            self._fail("simulate", "scenario", "must be 'decay' or 'front'")
        if sim["nx"] < 16:
            self._fail("simulate", "nx", "must be at least 16")
        if not 0 < sim["cfl"] <= 0.9:
            self._fail("simulate", "cfl", "must lie in (0, 0.9]")
        if sim["t_end"] < 0:
            self._fail("simulate", "t_end", "must be non-negative")
        if not 0 <= sim["amplitude"] <= 0.1:
            self._fail("simulate", "amplitude", "must lie in [0, 0.1]")
        if sim["shape"] not in ("mode", "pulse"):
            self._fail("simulate", "shape", "must be 'mode' or 'pulse'")
        if len(sim["weights"]) != 5:
            self._fail("simulate", "weights", "needs five numbers (theta ux uy uz psi)")
        if sim["output_stride"] < 1:
            self._fail("simulate", "output_stride", "must be at least 1")
        sw = self.values["sweep"]
        if not 0 <= sw["chi_factor_min"] < sw["chi_factor_max"]:
            self._fail("sweep", "chi_factor_max", "need 0 <= chi_factor_min < chi_factor_max")
        if sw["points"] < 2:
            self._fail("sweep", "points", "must be at least 2")

    # -- model objects -------------------------------------------------------

    def params(self) -> GasParams:
        g = self.values["gas"]
        return GasParams(m=g["m"], gamma=g["gamma"], s0=g["s0"])

    def thermo(self):
        s = self.values["state"]
        return eos_from_n_theta(self.params(), s["n"], s["theta"])

    def fluid(self) -> FluidState:
        s = self.values["state"]
        return FluidState.moving(self.thermo(), (s["vx"], s["vy"], s["vz"]))

    def chi_star(self) -> float:
        c = self.values["coefficients"]
        return chi_star(self.params(), self.thermo(), c["eta"], c["zeta"], c["mu"])

    def coeffs(self, chi: float | None = None) -> DissipationCoeffs:
        c = self.values["coefficients"]
        if chi is None:
            if c["chi"] is not None:
                chi = c["chi"]
            elif c["chi_factor"] is not None:
                chi = c["chi_factor"] * self.chi_star()
            else:
                chi = self.chi_star()
        return DissipationCoeffs(eta=c["eta"], zeta=c["zeta"], chi=chi, mu=c["mu"])

    def run_config(self) -> RunConfig:
        s = self.values["simulate"]
        st = self.values["state"]
        pert = Perturbation(
            amplitude=s["amplitude"], shape=s["shape"], mode=s["mode"], width=s["width"], weights=tuple(s["weights"])
        )
        return RunConfig(
            params=self.params(),
            coeffs=self.coeffs(),
            background=self.thermo(),
            perturbation=pert,
            nx=s["nx"],
            length=s["length"],
            cfl=s["cfl"],
            t_end=s["t_end"],
            output_stride=s["output_stride"],
            velocity=(st["vx"], st["vy"], st["vz"]),
            filter=s["filter"],
        )


# ----------------------------------------------------------------------------
# output helpers


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def format_rows(rows: list[dict], fmt: str) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    if fmt == "csv":
        wr = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: _fmt(v) for k, v in r.items()})
    else:
        for r in rows:
            buf.write(json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()}))
            buf.write("\n")
    return buf.getvalue()


class Output:
    def __init__(self, out_dir, fmt: str, stream=None):
        self.dir = Path(out_dir) if out_dir else None
        self.fmt = fmt
        self.stream = stream or sys.stdout
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def say(self, line: str = ""):
        print(line, file=self.stream)

    def table(self, name: str, rows: list[dict]):
        text = format_rows(rows, self.fmt)
        if self.dir:
            ext = "csv" if self.fmt == "csv" else "jsonl"
            (self.dir / f"{name}.{ext}").write_text(text)
        else:
            self.stream.write(text)


# ----------------------------------------------------------------------------
# commands


def cmd_check(cfg: Config, seed: int, out: Output) -> int:
    params, fluid, c = cfg.params(), cfg.fluid(), cfg.coeffs()
    d = derive_coefficients(params, fluid.thermo, c)
    cert = causality_certificate(params, fluid, c, n_directions=cfg.get("check", "directions"), seed=seed)
    eta, zeta, chi, mu = c.evaluate(fluid.thermo)
    out.say(f"status: {cert.algebraic.value}")
    out.say(f"spectral status: {cert.spectral.value}")
    out.say(f"hkm: time negative definite = {cert.hkm.verdict[0]}, space positive definite = {cert.hkm.verdict[1]}")
    out.say(f"max speed: {cert.max_speed:.12g}")
    row = {
        "eta": eta,
        "zeta": zeta,
        "chi": chi,
        "mu": mu,
        "chi_star": cfg.chi_star() if eta > 0 else float("nan"),
        "sigma": d.sigma,
        "zeta_tilde": d.zeta_tilde,
        "sigma_tilde": d.sigma_tilde,
        "gap": d.zeta_tilde + eta / 3.0,
        "status": cert.algebraic.value,
        "spectral_status": cert.spectral.value,
        "max_speed": cert.max_speed,
        "min_speed": cert.min_speed,
        "hkm_time_negative": cert.hkm.verdict[0],
        "hkm_space_positive": cert.hkm.verdict[1],
        "hkm_time_margin": cert.hkm.time_margin,
        "hkm_space_margin": cert.hkm.space_margin,
    }
    out.table("check", [row])
    if not cert.agree:
        out.say("algebraic and spectral classification disagree")
        return EXIT_FAIL
    ok = cert.hkm.ok and cert.algebraic is not CausalityStatus.ACAUSAL
    return EXIT_OK if ok else EXIT_FAIL


def _slope_ok(fit) -> bool:
    return fit.exact or abs(fit.slope - 2.0) <= SLOPE_TOL


def cmd_equivalence(cfg: Config, seed: int, out: Output) -> int:
    params, state, c = cfg.params(), cfg.thermo(), cfg.coeffs()
    kw = dict(scales=cfg.get("equivalence", "scales"), samples=cfg.get("equivalence", "samples"), seed=seed)
    eck = eckart_ansatz(params, state, c)
    lan = landau_ansatz(params, state, c)
    new = run_chain(params, state, c)
    factor = cfg.get("equivalence", "zeta3_factor")
    if factor != 1.0:
        d = derive_coefficients(params, state, c)
        new = new.with_group("R", new.group("R") + np.array([0.0, (factor - 1.0) * d.zt3, 0.0]))
    pairs = [("eckart-new", eck, new), ("landau-new", lan, new), ("eckart-landau", eck, lan)]
    rows, ok = [], True
    for name, a, b in pairs:
        fit = first_order_residual(a, b, params, state, **kw)
        for e, r in zip(fit.epsilons, fit.residuals):
            rows.append({"pair": name, "eps": e, "residual": r, "slope": fit.slope, "exact": fit.exact})
        good = _slope_ok(fit)
        ok &= good
        label = "exact" if fit.exact else f"slope {fit.slope:.4f}"
        out.say(f"{name}: {label} {'PASS' if good else 'FAIL'}")
    if c.evaluate(state)[3] > 0:
        note = zeta3_conformance(params, state, c, **kw).note
    else:
        note = "mu = 0: the diffusion correction vanishes, no sign to decide"
    out.say(f"zeta_tilde_3 conformance: {note}")
    out.table("equivalence", rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_entropy(cfg: Config, seed: int, out: Output) -> int:
    params, state, c = cfg.params(), cfg.thermo(), cfg.coeffs()
    samples = cfg.get("entropy", "samples")
    rows, ok = [], True
    ens = sample_random_gradients(samples, np.random.default_rng(seed))
    q_eck = ansatz_production(eckart_ansatz(params, state, c), state.theta, ens)
    eck_ok = bool(q_eck.min() >= 0.0)
    ok &= eck_ok
    out.say(f"eckart min Q over {samples} draws: {q_eck.min():.6g} {'PASS' if eck_ok else 'FAIL'}")
    rows.append({"check": "eckart_min_q", "value": float(q_eck.min()), "pass": eck_ok})
    steps = run_chain_steps(params, state, c)
    for (_, base), (name, shift) in zip(steps, chain_shifts(params, state, c)):
        fit = delta_q_order(params, state, shift, base=base, samples=cfg.get("entropy", "shift_samples"), seed=seed)
        good = _slope_ok(fit)
        ok &= good
        out.say(f"delta Q slope, {name}: {'exact' if fit.exact else f'{fit.slope:.4f}'} {'PASS' if good else 'FAIL'}")
        rows.append({"check": f"delta_q_slope:{name}", "value": fit.slope, "pass": good})
    rep = new_model_entropy_sign(params, state, c, samples=samples, eps=cfg.get("entropy", "eps"), seed=seed)
    ok &= rep.ok
    out.say(f"new model min Q = {rep.min_q:.6g} >= -K eps^2 = {-rep.bound:.6g}: {'PASS' if rep.ok else 'FAIL'}")
    rows.append({"check": "new_model_min_q", "value": rep.min_q, "pass": rep.ok})
    rows.append({"check": "new_model_min_q_over_eps", "value": rep.min_q_over_eps, "pass": rep.ok})
    rows.append({"check": "new_model_k_fit", "value": rep.k_fit, "pass": rep.ok})
    out.table("entropy", rows)
    return EXIT_OK if ok else EXIT_FAIL


def _series_rows(ts) -> list[dict]:
    return [
        {"t": t, "L2": a, "Linf": b, "total_E": e, "total_P": p, "total_N": n}
        for t, a, b, e, p, n in zip(ts.t, ts.l2, ts.linf, ts.total_e, ts.total_p, ts.total_n)
    ]


def _snapshot_rows(snaps, x) -> list[dict]:
    rows = []
    for t, w in snaps:
        for xi, r in zip(x, w):
            rows.append({"t": t, "x": float(xi), **{f"psi{i}": float(r[i]) for i in range(5)}})
    return rows


def cmd_simulate(cfg: Config, seed: int, out: Output) -> int:
    try:
        rc = cfg.run_config()
    except ConfigError as exc:
        raise ConfigValidationError(f"[simulate]: {exc}") from None
    sim = cfg.values["simulate"]
    try:
        if sim["scenario"] == "decay":
            ts = run_decay(rc, snapshots=sim["snapshots"])
            out.table("timeseries", _series_rows(ts))
            if sim["snapshots"]:
                out.table("snapshots", _snapshot_rows(ts.snapshots, rc.grid.x))
            ok = len(ts.l2) == 1 or ts.l2[-1] < ts.l2[0] or ts.l2[0] == 0.0
            out.say(f"decay: L2 {ts.l2[0]:.6g} -> {ts.l2[-1]:.6g} {'PASS' if ok else 'FAIL'}")
            return EXIT_OK if ok else EXIT_FAIL
        if sim["shape"] != "pulse":
            raise ConfigValidationError(f"{cfg.where('simulate', 'shape')}: the front scenario needs shape = pulse")
        res = run_front_speed(rc, threshold=sim["threshold"])
        rows = [{"t": t, "front": p} for t, p in zip(res.times, res.positions)]
        out.table("front", rows)
        if not res.detected:
            out.say("front: no front detected")
            return EXIT_OK
        ok = res.speed <= 1.02
        out.say(f"front speed: {res.speed:.6g} {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_FAIL
    except SolverError as exc:
        out.say(f"solver abort: {exc}")
        if exc.last_valid is not None:
            out.table("last_valid", _snapshot_rows([(exc.last_valid.t, exc.last_valid.psi)], rc.grid.x))
        return EXIT_FAIL


def cmd_sweep(cfg: Config, seed: int, out: Output) -> int:
    params, fluid = cfg.params(), cfg.fluid()
    sw = cfg.values["sweep"]
    cs = cfg.chi_star()
    eta = cfg.get("coefficients", "eta")
    rows = []
    for f in np.linspace(sw["chi_factor_min"], sw["chi_factor_max"], sw["points"]):
        c = cfg.coeffs(chi=float(f) * cs)
        d = derive_coefficients(params, fluid.thermo, c)
        status = causality_status(c, d, fluid.thermo)
        row = {"chi": float(f) * cs, "chi_over_chi_star": float(f), "gap": d.zeta_tilde + eta / 3.0, "status": status.value}
        if sw["spectral"] and c.mu > 0 and c.chi > 0:
            b = assemble_b_tensor(fluid, d, c)
            row["max_speed_x"] = signal_speeds(b, fluid, (1.0, 0.0, 0.0)).max_speed
        rows.append(row)
    for r in rows:
        out.say(f"chi/chi* = {r['chi_over_chi_star']:.4f}: {r['status']}")
    out.table("sweep", rows)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "equivalence": cmd_equivalence,
    "entropy": cmd_entropy,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="causalfluid", description="Verification and simulation workflows.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI configuration file (defaults are used when omitted)")
        sp.add_argument("--seed", type=int, default=None, help="ensemble seed (overrides [run] seed)")
        sp.add_argument("--out", help="directory for output tables (stdout when omitted)")
        sp.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    return ap


def main(argv=None, stream=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    out_stream = stream or sys.stdout
    try:
        cfg = Config.from_file(args.config) if args.config else Config.defaults()
        if not args.config:
            cfg.validate()
        seed = args.seed if args.seed is not None else cfg.get("run", "seed")
        out = Output(args.out, args.format, out_stream)
        return COMMANDS[args.command](cfg, seed, out)
    except (ConfigValidationError, DegenerateDiffusion, CoefficientError, ThermoDomainError, KinematicsError, ConfigError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
