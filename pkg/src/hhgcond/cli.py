"""Config-driven scenario runner.

    hhgcond --config run.yaml [--out DIR] [--dry-run] [--verify] [--tol NAME=VALUE ...]

Exit codes: 0 success, 2 configuration error, 3 numerical guard violation,
4 verification failure. Data files carry no timestamps, so an identical
config reproduces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import analysis, conditioning as cond, css, dipole, states, verify
from .errors import ConfigError, GuardError, VerificationError

SCENARIOS = ("phi_hh", "psi_omega", "w_limit", "cat", "completeness", "cutoff_scan", "verify")

DEFAULT_TOLERANCES = {"oracle": verify.DEFAULT_TOL, "completeness": 1e-3}

_TOP_KEYS = {
    "scenario", "alpha", "kappa", "cutoff", "output", "shifts", "dipole",
    "measurement", "grid", "w_limit", "completeness", "scan", "tolerances",
}
_SECTION_KEYS = {
    "shifts": {"chi", "phases", "file"},
    "dipole": {"kind", "order", "amplitude", "lines", "envelope", "cycles", "samples_per_cycle", "omega", "file"},
    "measurement": {"measured", "postselect", "outcome"},
    "grid": {"center", "radius", "step"},
    "w_limit": {"modes"},
    "completeness": {"chi", "chi1", "fock_cutoff"},
    "scan": {"cutoffs"},
}


@dataclass
class RunConfig:
    scenario: str
    alpha: complex = 0j
    kappa: float = dipole.DEFAULT_KAPPA
    cutoff: int = dipole.DEFAULT_CUTOFF
    output: str = "out"
    shifts: dict | None = None
    dipole: dict | None = None
    measurement: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    w_limit: dict = field(default_factory=dict)
    completeness: dict = field(default_factory=dict)
    scan: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    base_dir: Path = field(default_factory=Path.cwd)


def _complex(value, where) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        raise ConfigError(f"{where}: complex numbers are written as [re, im], got {value!r}")
    return complex(float(value[0]), float(value[1]))


def _complex_list(values, where) -> list[complex]:
    if not isinstance(values, list):
        raise ConfigError(f"{where}: expected a list of [re, im] pairs")
    return [_complex(v, f"{where}[{i}]") for i, v in enumerate(values)]


def _number(value, where, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return kind(value)


def parse_config(data, base_dir: Path | None = None) -> RunConfig:
    """Validate a decoded config mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    for name, allowed in _SECTION_KEYS.items():
        section = data.get(name)
        if section is None:
            continue
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown key(s) in {name!r}: {sorted(bad)}")
    scenario = data.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    cfg = RunConfig(scenario=scenario, base_dir=base_dir or Path.cwd())
    if "alpha" in data:
        cfg.alpha = _complex(data["alpha"], "alpha")
    if "kappa" in data:
        cfg.kappa = _number(data["kappa"], "kappa")
    if "cutoff" in data:
        cfg.cutoff = _number(data["cutoff"], "cutoff", int)
    if "output" in data:
        cfg.output = str(data["output"])
    cfg.shifts = data.get("shifts")
    cfg.dipole = data.get("dipole")
    for name in ("measurement", "grid", "w_limit", "completeness", "scan"):
        setattr(cfg, name, dict(data.get(name) or {}))
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (data.get("tolerances") or {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        tol[k] = _number(v, f"tolerances.{k}")
    cfg.tolerances = tol
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    """Scenario/parameter consistency, checked before anything is computed."""
    needs_table = cfg.scenario in ("phi_hh", "psi_omega", "w_limit", "cat")
    if cfg.shifts is not None and cfg.dipole is not None:
        raise ConfigError("give either 'shifts' or 'dipole', not both")
    if needs_table and cfg.shifts is None and cfg.dipole is None:
        raise ConfigError(f"scenario {cfg.scenario!r} needs a 'shifts' or 'dipole' section")
    if cfg.scenario == "cutoff_scan":
        if cfg.dipole is None:
            raise ConfigError("cutoff_scan needs a 'dipole' section")
        ns = cfg.scan.get("cutoffs")
        if not isinstance(ns, list) or not ns:
            raise ConfigError("cutoff_scan needs scan.cutoffs, a nonempty list")
        ns = [_number(n, "scan.cutoffs", int) for n in ns]
        if ns != sorted(ns) or min(ns) < 2:
            raise ConfigError(f"scan.cutoffs must be ascending and >= 2, got {ns}")
    if cfg.shifts is not None:
        if ("chi" in cfg.shifts) == ("file" in cfg.shifts):
            raise ConfigError("shifts needs exactly one of 'chi' or 'file'")
        if "chi" in cfg.shifts:
            chis = _complex_list(cfg.shifts["chi"], "shifts.chi")
            if "phases" in cfg.shifts and len(cfg.shifts["phases"]) != len(chis):
                raise ConfigError("shifts.phases must match shifts.chi in length")
    if cfg.dipole is not None:
        if "file" in cfg.dipole:
            extra = set(cfg.dipole) - {"file", "omega"}
            if extra:
                raise ConfigError(f"dipole.file cannot be combined with {sorted(extra)}")
        else:
            try:
                _dipole_spec(cfg.dipole).validate()
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"invalid dipole section: {exc}") from exc
    if cfg.measurement:
        m = cfg.measurement
        measured = m.get("measured", [])
        if not isinstance(measured, list):
            raise ConfigError("measurement.measured must be a list of mode indices")
        if "postselect" in m and len(_complex_list(m["postselect"], "measurement.postselect")) != len(measured):
            raise ConfigError("measurement.postselect must match measurement.measured in length")
        if m.get("outcome", cond.EXCITED) not in (cond.EXCITED, cond.VACUUM):
            raise ConfigError(f"measurement.outcome must be {cond.EXCITED!r} or {cond.VACUUM!r}")
    if cfg.scenario == "w_limit":
        modes = cfg.w_limit.get("modes")
        if not isinstance(modes, list) or len(modes) != 3:
            raise ConfigError("w_limit.modes must list three harmonic orders")
    if cfg.scenario == "completeness" and "chi" not in cfg.completeness:
        raise ConfigError("completeness needs completeness.chi")
    for key in ("radius", "step"):
        if key in cfg.grid:
            if _number(cfg.grid[key], f"grid.{key}") <= 0:
                raise ConfigError(f"grid.{key} must be > 0")


def _dipole_spec(d: dict) -> dipole.DipoleSpec:
    kind = d.get("kind")
    if kind == "monochromatic":
        inner = dipole.Monochromatic(int(d["order"]), float(d.get("amplitude", 1.0)))
    elif kind == "comb":
        inner = dipole.HarmonicComb(d["lines"])
    elif kind == "enveloped":
        inner = dipole.HarmonicComb(d["lines"]) if "lines" in d else dipole.Monochromatic(
            int(d["order"]), float(d.get("amplitude", 1.0))
        )
        env = d["envelope"]
        inner = dipole.Enveloped(inner, float(env["center"]), float(env["width"]))
    else:
        raise ValueError(f"dipole.kind must be monochromatic, comb or enveloped, got {kind!r}")
    return dipole.DipoleSpec(
        inner,
        int(d.get("cycles", 8)),
        int(d.get("samples_per_cycle", 64)),
        float(d.get("omega", 1.0)),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data, path.parent)


# -- pipeline ----------------------------------------------------------------

def _resolve(cfg: RunConfig, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else cfg.base_dir / p


def waveform(cfg: RunConfig) -> dipole.DipoleWaveform:
    d = cfg.dipole
    if "file" in d:
        return dipole.load_waveform(_resolve(cfg, d["file"]), float(d.get("omega", 1.0)))
    return dipole.synth_dipole(_dipole_spec(d))


def shift_table(cfg: RunConfig) -> dipole.ShiftTable:
    if cfg.shifts is not None:
        if "file" in cfg.shifts:
            return dipole.parse_shift_table(_resolve(cfg, cfg.shifts["file"]).read_text())
        chis = _complex_list(cfg.shifts["chi"], "shifts.chi")
        return dipole.table_from_shifts(chis, cfg.shifts.get("phases"), cfg.kappa)
    return dipole.all_shifts(waveform(cfg), cfg.cutoff, cfg.kappa)


def _source_steps(cfg: RunConfig) -> list[str]:
    if cfg.shifts is not None:
        return ["shifts (direct input)"]
    src = "dipole file" if "file" in (cfg.dipole or {}) else f"dipole ({cfg.dipole.get('kind')})"
    return [src, f"shifts (N={cfg.cutoff}, kappa={cfg.kappa})"]


def _measurement(cfg: RunConfig, t: dipole.ShiftTable, default_measured, default_post):
    m = cfg.measurement
    measured = [int(x) for x in m.get("measured", default_measured)]
    if "postselect" in m:
        post = _complex_list(m["postselect"], "measurement.postselect")
    elif "measured" in m:
        init = np.zeros(t.N, dtype=complex)
        init[0] = cfg.alpha
        post = [init[q] + t.shifts[q] for q in measured]
    else:
        post = default_post
    return measured, post, m.get("outcome", cond.EXCITED)


def describe(cfg: RunConfig) -> str:
    """Human-readable plan of the resolved pipeline; computes nothing."""
    lines = [f"scenario: {cfg.scenario}", f"alpha: {cfg.alpha!r}"]
    steps: list[str] = []
    if cfg.scenario in ("phi_hh", "psi_omega", "cat", "w_limit"):
        steps += _source_steps(cfg) + ["hhg_channel", "pi_excited"]
        if cfg.scenario == "psi_omega":
            steps += ["postselect (fundamental)", "entanglement_entropy"]
        elif cfg.scenario == "cat":
            steps += ["postselect (harmonics)", "wigner", "negativity_volume"]
        elif cfg.scenario == "w_limit":
            steps += ["postselect (fundamental)", f"w_limit modes={cfg.w_limit.get('modes')}", "fidelity"]
        else:
            steps += ["entanglement_entropy"]
    elif cfg.scenario == "completeness":
        chi = _complex(cfg.completeness["chi"], "completeness.chi")
        step = float(cfg.grid.get("step", 0.05))
        radius = float(cfg.grid.get("radius", abs(chi) + 6.0))
        n = int(np.floor(radius / step))
        estimate = int(round(np.pi * (radius / step) ** 2))
        steps += [
            f"completeness grid: radius={radius:g} step={step:g} ({2 * n + 1}x{2 * n + 1} square, ~{estimate} points in disk)",
            f"fock cutoff={int(cfg.completeness.get('fock_cutoff', 24))}",
        ]
    elif cfg.scenario == "cutoff_scan":
        steps += [_source_steps(cfg)[0], f"all_shifts for N in {cfg.scan['cutoffs']}", "decoherence_factor", "build_cat", "negativity_volume"]
    else:
        steps += [f"oracle suite: {', '.join(verify.CHECKS)}"]
    lines.append("pipeline: " + " -> ".join(steps))
    lines.append(f"guards: Fock |amp|^2 <= cutoff/4, leakage < {1e-8:g}; tolerances: {cfg.tolerances}")
    lines.append(f"output: {cfg.output}")
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real:.17e},{x.imag:.17e}"
    if isinstance(x, float):
        return f"{x:.17e}"
    return str(x)


def _summary(rows: dict) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in rows.items())


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def execute(cfg: RunConfig) -> tuple[dict[str, str], int]:
    """Run the scenario; returns ``{filename: text}`` and the exit status."""
    files: dict[str, str] = {}
    status = 0
    a = cfg.alpha
    sc = cfg.scenario
    if sc in ("phi_hh", "psi_omega", "w_limit", "cat"):
        t = shift_table(cfg)
        files["shifts.txt"] = dipole.format_shift_table(t)
    if sc == "phi_hh":
        out = cond.build_phi_hh(a, t)
        ns = states.NamedState("phi_hh", out.state, out.probability, a, t)
        files["state.json"] = _json(states.to_dict(ns))
        rows = {"probability": out.probability, "n_terms": out.state.n_terms}
        if out.state.n_terms:
            rows["entropy_fundamental"] = analysis.entanglement_entropy(out.state, [0]).entropy
        files["summary.txt"] = _summary(rows)
    elif sc == "psi_omega":
        measured, post, outcome = _measurement(cfg, t, [0], [a + t.chi1])
        out = cond.quantum_operation(a, t, measured, post, outcome)
        ns = states.NamedState("psi_omega", out.state, out.probability, a, t)
        files["state.json"] = _json(states.to_dict(ns))
        rows = {"probability_density": out.probability, "n_terms": out.state.n_terms}
        if out.state.n_terms and out.state.n_modes > 1:
            rows["entropy_first_harmonic"] = analysis.entanglement_entropy(out.state, [0]).entropy
        files["summary.txt"] = _summary(rows)
    elif sc == "cat":
        measured, post, outcome = _measurement(cfg, t, list(range(1, t.N)), list(t.harmonics))
        out = cond.quantum_operation(a, t, measured, post, outcome)
        if out.state.n_modes != 1:
            raise ConfigError("cat scenario must leave only the fundamental unmeasured")
        ns = states.NamedState("cat", out.state, out.probability, a, t)
        files["state.json"] = _json(states.to_dict(ns))
        rows = {"probability_density": out.probability, "n_terms": out.state.n_terms}
        if out.probability > 0:
            s = css.normalized(out.state)
            default = analysis.cat_grid(a, t.chi1)
            grid = analysis.PhaseGrid(
                _complex(cfg.grid["center"], "grid.center") if "center" in cfg.grid else default.center,
                float(cfg.grid.get("radius", default.radius)),
                float(cfg.grid.get("step", default.step)),
            )
            w = analysis.wigner(s, grid)
            files["wigner.txt"] = analysis.format_grid(w)
            mean, var = analysis.photon_stats(s)
            rows.update(
                wigner_min=float(w.values.min()),
                wigner_integral=analysis.grid_integral(w),
                negativity_volume=analysis.negativity_volume(w),
                photon_mean=mean,
                photon_variance=var,
            )
        files["summary.txt"] = _summary(rows)
    elif sc == "w_limit":
        modes = [int(q) for q in cfg.w_limit["modes"]]
        w = states.w_limit(t, modes)
        lines = ["# index n_q n_r n_s re im"]
        for idx in np.flatnonzero(w.amplitudes):
            n = np.unravel_index(idx, (w.cutoff,) * 3)
            z = w.amplitudes[idx]
            lines.append(f"{idx} {n[0]} {n[1]} {n[2]} {z.real:.17e} {z.imag:.17e}")
        files["w_state.txt"] = "\n".join(lines) + "\n"
        files["summary.txt"] = _summary({"fidelity_psi_omega": states.w_limit_fidelity(a, t, modes)})
    elif sc == "completeness":
        c = cfg.completeness
        chi = _complex(c["chi"], "completeness.chi")
        r = cond.completeness_check(
            a,
            chi,
            int(c.get("fock_cutoff", 24)),
            float(cfg.grid.get("step", 0.05)),
            float(cfg.grid["radius"]) if "radius" in cfg.grid else None,
            chi1=_complex(c["chi1"], "completeness.chi1") if "chi1" in c else 0j,
        )
        tol = cfg.tolerances["completeness"]
        files["summary.txt"] = _summary(
            {"deviation": r.deviation, "tolerance": tol, "n_points": r.n_points, "step": r.step, "radius": r.radius}
        )
        if r.deviation >= tol:
            status = 4
    elif sc == "cutoff_scan":
        rows = analysis.cutoff_scan(waveform(cfg), cfg.kappa, cfg.scan["cutoffs"], a)
        lines = ["# N omega emission_probability cat_negativity"]
        for row in rows:
            lines.append(f"{row.N} {row.omega:.17e} {row.emission_probability:.17e} {row.cat_negativity:.17e}")
        files["scan.txt"] = "\n".join(lines) + "\n"
    elif sc == "verify":
        text, ok = _verify_report(cfg.tolerances["oracle"])
        files["verify.txt"] = text
        status = 0 if ok else 4
    return files, status


def _verify_report(tol: float) -> tuple[str, bool]:
    results = verify.run_oracle_suite(tol)
    lines = [f"{r.name} error={r.error:.3e} tol={r.tol:.1e} {'PASS' if r.passed else 'FAIL'}" for r in results]
    return "\n".join(lines) + "\n", all(r.passed for r in results)


def write_outputs(files: dict[str, str], out_dir: Path) -> Path:
    """Write files plus ``manifest.txt`` (sha256 and name per line)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name in sorted(files):
        data = files[name].encode("utf-8")
        (out_dir / name).write_bytes(data)
        manifest.append(f"{hashlib.sha256(data).hexdigest()}  {name}")
    path = out_dir / "manifest.txt"
    path.write_text("\n".join(manifest) + "\n")
    return path


def run(cfg: RunConfig, out_dir: Path | None = None, also_verify: bool = False) -> int:
    files, status = execute(cfg)
    if also_verify and cfg.scenario != "verify":
        text, ok = _verify_report(cfg.tolerances["oracle"])
        files["verify.txt"] = text
        if not ok:
            status = 4
    write_outputs(files, out_dir or _resolve(cfg, cfg.output))
    return status


def _parse_tol(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        try:
            out[k] = float(v)
        except ValueError as exc:
            raise ConfigError(f"--tol {k}: {v!r} is not a number") from exc
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hhgcond", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="YAML run descriptor")
    parser.add_argument("--out", help="output directory (overrides 'output' in the config)")
    parser.add_argument("--dry-run", action="store_true", help="print the plan and exit without writing files")
    parser.add_argument("--verify", action="store_true", help="also run the oracle-equivalence suite")
    parser.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override")
    args = parser.parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.verify:
            cfg = parse_config({"scenario": "verify"})
        else:
            raise ConfigError("--config is required unless --verify is given")
        cfg.tolerances.update(_parse_tol(args.tol))
        if args.dry_run:
            sys.stdout.write(describe(cfg))
            return 0
        out = Path(args.out) if args.out else None
        status = run(cfg, out, also_verify=args.verify)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 4
    if status == 4:
        print("verification failed; see the report in the output directory", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
