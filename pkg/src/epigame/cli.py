"""Command-line front end.

Exit status: 0 success, 1 a ``--check`` expectation or classifier agreement
failed, 2 bad configuration or usage, 3 the integration itself failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .bifurcation import confirm_transcritical, export_branches, sweep_gamma, transcritical_points
from .config import ConfigError, ScenarioConfig, parse_config
from .equilibria import (render_table, reports_to_json, siri_strong_classify, siri_weak_classify,
                         sis_equilibria, table1_row, vanilla_siri_classify)
from .errors import ChatteringError, StepSizeError, VariantError
from .hybrid import classify_reduced_sis, simulate_hybrid
from .integrate import Trajectory, final_window, simulate_siri, simulate_siri_vanilla, simulate_sis
from .presets import Expectation, Run, get_preset, list_presets, override_integration

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_INTEGRATION = 0, 1, 2, 3

FULL_MODELS = ("sis", "siri", "siri-vanilla")
REDUCED_MODELS = ("reduced-sis", "reduced-siri-strong", "reduced-siri-weak")


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to a temporary file beside ``path`` and rename it into
    place, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class Outcome:
    name: str
    artifact: Optional[Path]
    summary: list[str]
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def prediction(config: ScenarioConfig) -> tuple[str, tuple[float, ...]]:
    """Classifier verdict for a scenario and the prevalence levels it
    allows as long-run outcomes (empty when there is no verdict)."""
    p, m = config.params, config.model
    if m == "siri-vanilla":
        v = vanilla_siri_classify(p.beta, p.beta_hat, p.gamma)
        levels = {"infection-free": (0.0,), "epidemic": (0.0,), "endemic": (v.endemic_level,),
                  "bistable": (0.0, v.endemic_level)}[v.regime]
        return f"vanilla SIRI regime: {v.regime} (R0={v.R0:.4g}, R1={v.R1:.4g})", levels
    if m in ("sis", "reduced-sis"):
        if m == "reduced-sis":
            o = classify_reduced_sis(p)
            return f"reduced SIS case {o.case_id} ({o.condition}), limit y = {o.limit:.6g}", (o.limit,)
        label = table1_row(p)
        rep = next(r for r in sis_equilibria(p) if r.label == label)
        return f"stable equilibrium {label} at y = {rep.coordinates[0]:.6g}", (rep.coordinates[0],)
    # SIRI: the reduced-system classifier for whichever immunity ordering applies
    try:
        rep = siri_strong_classify(p) if p.beta_p > p.beta_hat_p else siri_weak_classify(p)
    except VariantError:
        return "no classifier for beta_p = beta_hat_p", ()
    levels = (rep.attractor_y, 0.0) if rep.bistable else (rep.attractor_y,)
    text = f"{rep.variant} case {rep.case_id} ({rep.condition}), limit y = {rep.attractor_y:.6g}"
    if rep.bistable:
        text += "; bistable with the IFE"
    return text, levels


def _simulate(config: ScenarioConfig) -> Trajectory:
    m, ic = config.model, config.integration
    if m == "sis":
        return simulate_sis(config.params, config.initial, ic)
    if m == "siri":
        return simulate_siri(config.params, config.initial, ic)
    if m == "siri-vanilla":
        return simulate_siri_vanilla(config.params, config.initial, ic)
    variant = {"reduced-sis": "sis", "reduced-siri-strong": "siri-strong", "reduced-siri-weak": "siri-weak"}[m]
    return simulate_hybrid(variant, config.params, config.initial, ic)


def _fmt_state(traj: Trajectory) -> str:
    return ", ".join(f"{c}={v:.6g}" for c, v in zip(traj.columns, traj.final))


def run_trajectory(config: ScenarioConfig, path: Path, name: str,
                   expect: Sequence[Expectation] = (), check_classifier: bool = False) -> Outcome:
    traj = _simulate(config)
    atomic_write(path, traj.to_csv())
    y_mean = final_window(traj, "y").mean
    verdict, levels = prediction(config)
    summary = [f"final state: {_fmt_state(traj)}",
               f"attractor (final-window mean): y = {y_mean:.6g}",
               f"classifier: {verdict}"]
    if traj.modes is not None:
        summary.append(f"final mode: {traj.modes[-1]}")
    if config.provenance:
        summary.append(f"provenance = {config.provenance}")
    failures = []
    for e in expect:
        v = final_window(traj, e.column).mean
        if not e.holds(v):
            failures.append(f"expected {e.describe()}, got {v:.6g}")
    if check_classifier and levels and not any(abs(y_mean - lv) <= 0.01 for lv in levels):
        failures.append(f"simulation reached y = {y_mean:.6g}, classifier allows {levels}")
    return Outcome(name, path, summary, failures)


def run_bifurcation(config: ScenarioConfig, path: Path, name: str) -> Outcome:
    if config.model != "sis" or config.sweep is None:
        raise ConfigError("bifurcate needs model kind = sis and a [sweep] section", 0)
    table = sweep_gamma(config.params, *config.sweep)
    atomic_write(path, export_branches(table, include_nonexistent=True))
    seq = " -> ".join(table.stable_sequence())
    summary = [f"stable branch sequence with increasing gamma: {seq}"]
    failures = []
    for t in transcritical_points(config.params):
        inside = t.gamma is not None and config.sweep[0] <= t.gamma <= config.sweep[1]
        if t.gamma is None:
            summary.append(f"{t.label}: undefined ({t.notice})")
            continue
        ok = confirm_transcritical(config.params, t)
        summary.append(f"{t.label} gamma={t.gamma:.12g} {'/'.join(t.branches)} "
                       f"{'confirmed' if ok else 'NOT confirmed'}{'' if inside else ' (outside sweep)'}")
        if not ok:
            failures.append(f"{t.label} eigenvalue sign change not confirmed")
    return Outcome(name, path, summary, failures)


def run_equilibria(config: ScenarioConfig, path: Path, name: str) -> Outcome:
    if config.model not in ("sis", "reduced-sis"):
        raise ConfigError("equilibria needs an SIS model; use classify for SIRI", 0)
    reports = sis_equilibria(config.params)
    atomic_write(path, reports_to_json(reports) + "\n")
    return Outcome(name, path, render_table(reports).splitlines())


def run_classify(config: ScenarioConfig, path: Path, name: str) -> Outcome:
    p, m = config.params, config.model
    if m in ("siri", "reduced-siri-strong", "reduced-siri-weak"):
        rep = siri_strong_classify(p) if m == "reduced-siri-strong" or (m == "siri" and p.beta_p > p.beta_hat_p) \
            else siri_weak_classify(p)
        text = reports_to_json(rep)
        summary = [f"{rep.variant} case {rep.case_id}: {rep.condition}",
                   f"IFE stability: {rep.ife_stability}" + (f" (bound r* = {rep.ife_bound:.6g})" if rep.ife_bound
                                                           is not None else ""),
                   f"bistable: {'yes' if rep.bistable else 'no'}",
                   f"predicted attractor y = {rep.attractor_y:.6g}"]
        summary += [f"  {e.label}: {'exists' if e.exists else 'absent'} {e.stability or ''}".rstrip()
                    for e in rep.equilibria]
    elif m == "siri-vanilla":
        v = vanilla_siri_classify(p.beta, p.beta_hat, p.gamma)
        text = json.dumps(v.__dict__, indent=2, default=str)
        summary = [f"regime: {v.regime}", f"R0 = {v.R0:.6g}, R1 = {v.R1:.6g}, M = {v.M:.6g}"]
        if v.basin_threshold is not None:
            summary.append(f"basin threshold y(0) = {v.basin_threshold:.6g} (with r(0) = 0)")
        if v.notice:
            summary.append(v.notice)
    else:
        verdict, _ = prediction(config)
        o = classify_reduced_sis(p)
        text = json.dumps(o._asdict(), indent=2)
        summary = [verdict, f"reduced SIS case {o.case_id}: {o.condition}",
                   f"monotone: {o.monotone}, sliding: {o.sliding_limit}"]
    atomic_write(path, text + "\n")
    return Outcome(name, path, summary)


_SUFFIX = {"simulate": ".csv", "reduced": ".csv", "bifurcate": ".csv", "equilibria": ".json", "classify": ".json"}


def run_scenario(config: ScenarioConfig, out_dir: Path = Path("."), name: str = "scenario",
                 command: Optional[str] = None, expect: Sequence[Expectation] = (),
                 check_classifier: bool = False) -> Outcome:
    """Dispatch one scenario and write its artifact.

    Without ``command`` the kind of run follows from the config: a sweep
    section means a bifurcation diagram, a reduced model a hybrid run and
    anything else a simulation.
    """
    if command is None:
        command = "bifurcate" if config.sweep is not None else (
            "reduced" if config.model in REDUCED_MODELS else "simulate")
    if command == "simulate" and config.model not in FULL_MODELS:
        raise ConfigError(f"simulate needs one of {FULL_MODELS}; use 'reduced' for {config.model}", 0)
    if command == "reduced" and config.model not in REDUCED_MODELS:
        raise ConfigError(f"reduced needs one of {REDUCED_MODELS}", 0)
    path = Path(config.output_path) if config.output_path else Path(out_dir) / f"{name}{_SUFFIX[command]}"
    if command in ("simulate", "reduced"):
        return run_trajectory(config, path, name, expect, check_classifier)
    if command == "bifurcate":
        return run_bifurcation(config, path, name)
    if command == "equilibria":
        return run_equilibria(config, path, name)
    return run_classify(config, path, name)


def _run_preset_item(args) -> Outcome:
    run, out_dir, check = args
    return run_scenario(run.config, out_dir, run.name, expect=run.expect if check else (),
                        check_classifier=check and run.config.model in REDUCED_MODELS)


def _print(outcome: Outcome, check: bool) -> None:
    print(f"== {outcome.name} -> {outcome.artifact}")
    for line in outcome.summary:
        print(f"   {line}")
    if check:
        for f in outcome.failures:
            print(f"   CHECK FAILED: {f}")
        if outcome.ok:
            print("   check: ok")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epigame",
                                     description="Coupled epidemic and protection-adoption dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("--config", required=True, type=Path, help="scenario file")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for multi-run presets")
        sp.add_argument("--dt", type=float, help="step size, overrides the config")
        sp.add_argument("--epsilon", type=float, help="timescale factor, overrides the config")
        sp.add_argument("--t-end", dest="t_end", type=float, help="horizon, overrides the config")
        sp.add_argument("--check", action="store_true",
                        help="exit nonzero if the outcome disagrees with the expectation or classifier")

    for name, text in (("simulate", "integrate the coupled system"),
                       ("reduced", "integrate the reduced hybrid system"),
                       ("equilibria", "SIS equilibria with stability"),
                       ("classify", "regime classification"),
                       ("bifurcate", "gamma sweep with transcritical points")):
        common(sub.add_parser(name, help=text))
    pp = sub.add_parser("preset", help="run a named scenario set")
    pp.add_argument("name")
    common(pp, config_required=False)
    sub.add_parser("list-presets", help="list the named scenario sets")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-presets":
        for name, desc in list_presets():
            print(f"{name:<12} {desc}")
        return EXIT_OK
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1", 0)
        if args.command == "preset":
            preset = get_preset(args.name)
            items = [(Run(r.name, override_integration(r.config, args.dt, args.epsilon, args.t_end), r.expect),
                      args.out, args.check) for r in preset.runs]
            if args.jobs > 1 and len(items) > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    outcomes = list(pool.map(_run_preset_item, items))
            else:
                outcomes = [_run_preset_item(it) for it in items]
        else:
            config = parse_config(args.config.read_text(encoding="utf-8"))
            config = override_integration(config, args.dt, args.epsilon, args.t_end)
            outcomes = [run_scenario(config, args.out, args.config.stem, args.command,
                                     check_classifier=args.check)]
    except (ConfigError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepSizeError as exc:
        print(f"integration failed {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except ChatteringError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    for o in outcomes:
        _print(o, args.check)
    if args.check and not all(o.ok for o in outcomes):
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
