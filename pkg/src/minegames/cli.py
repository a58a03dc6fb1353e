"""Batch driver: every engine as a subcommand with reproducible, parseable output.

Outputs are flat CSV (default) or JSON records with a fixed column order and a
``schema_version`` column; column meanings are documented in docs/formats.md.
When ``--out`` is given, a manifest (full parameter map, seed, engine version,
wall-clock duration) is written next to it as ``<out>.manifest.json``; the
data file itself stays comment-free so reading and re-emitting it is
byte-identical.  A flat ``key=value`` file can supply defaults via
``--config``; explicit flags win.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import click

from . import __version__, chain_solver, game, mdp, simulator
from ._engines import splitmix64
from .errors import (
    DomainError,
    InvalidPowerError,
    InvalidTruncationError,
    NumericalFailureError,
    SolverBracketError,
)
from .model import PowerSplit

SCHEMA_VERSION = 1
_WORKERS_ENV = "MINEGAMES_WORKERS"

_NUMERICAL_ERRORS = (NumericalFailureError, SolverBracketError)
_USAGE_ERRORS = (InvalidPowerError, InvalidTruncationError, DomainError, ValueError)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _emit(records, columns, fmt, out, manifest):
    if fmt == "csv":
        lines = [",".join(columns)]
        for r in records:
            lines.append(",".join(_fmt(r.get(c)) for c in columns))
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps([{c: r.get(c) for c in columns} for r in records], indent=2) + "\n"
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
        with open(str(out) + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise click.ClickException(f"cannot write output: {exc}") from exc


def _manifest(subcommand, params, seed, t0):
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "params": params,
        "seed": seed,
        "engine": {"package": "minegames", "version": __version__},
        "duration_seconds": round(time.time() - t0, 3),
    }


def _load_config(path) -> dict:
    cfg = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise click.UsageError(f"config line is not key=value: {line!r}")
            k, v = line.split("=", 1)
            cfg[k.strip()] = v.strip()
    return cfg


def _apply_config(ctx, config, values: dict) -> dict:
    """Fill defaulted parameters from a key=value config file."""
    if not config:
        return values
    cfg = _load_config(config)
    out = dict(values)
    for name, current in values.items():
        key_dash = name.replace("_", "-")
        if key_dash in cfg or name in cfg:
            src = ctx.get_parameter_source(name)
            if src is not None and src.name != "COMMANDLINE":
                raw = cfg.get(key_dash, cfg.get(name))
                if isinstance(current, bool):
                    out[name] = raw.lower() in ("1", "true", "yes", "on")
                elif isinstance(current, int):
                    out[name] = int(raw)
                elif isinstance(current, float):
                    out[name] = float(raw)
                else:
                    out[name] = raw
    return out


def _parse_grid(spec: str) -> list[float]:
    """start:stop:step, inclusive of stop up to float slack."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise click.UsageError(f"grid must be start:stop:step, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise click.UsageError(f"bad grid {spec!r}")
    vals, i = [], 0
    while True:
        v = start + i * step
        if v > stop + 1e-12:
            break
        vals.append(round(v, 12))
        i += 1
    return vals


def _guarded(fn):
    """Map engine failures to exit code 3, domain misuse to usage errors."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _NUMERICAL_ERRORS as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(3)
        except _USAGE_ERRORS as exc:
            raise click.UsageError(str(exc)) from exc

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Mining-strategy analysis: simulation, exact solves, equilibria, MDP."""


_common = [
    click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (stdout if omitted)."),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
    click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None, help="key=value defaults file."),
]


def _add_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


_SIM_COLUMNS = [
    "schema_version", "mode", "alpha", "beta", "gamma", "steps", "seed",
    "blocks_main_chain", "rrev_h", "rrev_sm", "rrev_im",
    "stderr_h", "stderr_sm", "stderr_im",
]


def _run_simulation(mode, alpha, beta, gamma, steps, seed) -> dict:
    cfg = simulator.SimConfig(PowerSplit(alpha, beta), steps=steps, seed=seed, gamma=gamma)
    if mode == "insightful":
        rep = simulator.simulate_three_pool(cfg, simulator.StrategyProfile3())
    elif mode == "honest-victim":
        rep = simulator.simulate_three_pool(
            cfg,
            simulator.StrategyProfile3(insightful_mode=simulator.InsightfulMode.HONEST),
        )
    elif mode == "baseline-selfish":
        rep = simulator.simulate_selfish_baseline(cfg)
    else:  # pragma: no cover - click restricts choices
        raise click.UsageError(f"unknown mode {mode}")
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "alpha": alpha,
        "beta": beta,
        "gamma": gamma,
        "steps": steps,
        "seed": seed,
        "blocks_main_chain": rep.blocks_main_chain,
        "rrev_h": rep.rrev[0],
        "rrev_sm": rep.rrev[1],
        "rrev_im": rep.rrev[2],
        "stderr_h": rep.stderr_rrev[0],
        "stderr_sm": rep.stderr_rrev[1],
        "stderr_im": rep.stderr_rrev[2],
    }


@main.command()
@click.option("--alpha", type=float, required=True, help="Selfish pool power.")
@click.option("--beta", type=float, default=0.0, show_default=True, help="Insightful pool power.")
@click.option("--steps", type=int, default=simulator.DEFAULT_STEPS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["insightful", "honest-victim", "baseline-selfish"]), default="insightful", show_default=True)
@click.option("--gamma", type=float, default=0.5, show_default=True, help="Baseline tie-break split.")
@_add_common
@click.pass_context
@_guarded
def simulate(ctx, alpha, beta, steps, seed, mode, gamma, out, fmt, config):
    """One Monte Carlo run; emits a single revenue row."""
    p = _apply_config(ctx, config, dict(alpha=alpha, beta=beta, steps=steps, seed=seed, mode=mode, gamma=gamma))
    t0 = time.time()
    rec = _run_simulation(p["mode"], p["alpha"], p["beta"], p["gamma"], p["steps"], p["seed"])
    _emit([rec], _SIM_COLUMNS, fmt, out, _manifest("simulate", p, p["seed"], t0))


_ANALYTIC_COLUMNS = [
    "schema_version", "alpha", "beta", "cap", "tail_mass", "transient",
    "rrev_h", "rrev_sm", "rrev_im", "er_h", "er_sm", "er_im",
]


def _analytic_record(alpha, beta, cap, tail_tol) -> dict:
    stat = chain_solver.stationary(PowerSplit(alpha, beta), cap, tail_tol)
    rec = {
        "schema_version": SCHEMA_VERSION,
        "alpha": alpha,
        "beta": beta,
        "cap": stat.cap,
        "tail_mass": stat.tail_mass,
        "transient": stat.transient,
    }
    if stat.transient:
        # long-run insightful share tends to 1 in this regime
        rec.update(rrev_h=0.0, rrev_sm=0.0, rrev_im=1.0, er_h=0.0, er_sm=0.0, er_im=0.0)
    else:
        er = chain_solver.expected_rewards(stat, PowerSplit(alpha, beta))
        rec.update(
            rrev_h=er.rrev[0], rrev_sm=er.rrev[1], rrev_im=er.rrev[2],
            er_h=er.er.honest, er_sm=er.er.selfish, er_im=er.er.insightful,
        )
    return rec


@main.command()
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--cap", type=int, default=chain_solver.DEFAULT_CAP, show_default=True)
@click.option("--tail-tol", type=float, default=chain_solver.DEFAULT_TAIL_TOL, show_default=True)
@_add_common
@click.pass_context
@_guarded
def analytic(ctx, alpha, beta, cap, tail_tol, out, fmt, config):
    """Exact stationary revenue split (or the transient sentinel)."""
    p = _apply_config(ctx, config, dict(alpha=alpha, beta=beta, cap=cap, tail_tol=tail_tol))
    t0 = time.time()
    rec = _analytic_record(p["alpha"], p["beta"], p["cap"], p["tail_tol"])
    _emit([rec], _ANALYTIC_COLUMNS, fmt, out, _manifest("analytic", p, None, t0))


_GAME_COLUMNS = [
    "schema_version", "record", "powers", "profile", "kind", "boundary_tie",
    "is_nash", "rrev", "improving_pools",
]

_STRATEGY_ALIASES = {
    "i": game.Strategy.INSIGHTFUL, "insightful": game.Strategy.INSIGHTFUL,
    "h": game.Strategy.RHONEST, "rhonest": game.Strategy.RHONEST, "honest": game.Strategy.RHONEST,
}


def _parse_powers(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise click.UsageError(f"powers must be comma-separated floats, got {text!r}") from None


def _profile_str(profile) -> str:
    return ";".join("I" if s is game.Strategy.INSIGHTFUL else "H" for s in profile)


@main.command("game")
@click.option("--powers", required=True, help="Comma-separated pool powers summing to 1.")
@click.option("--profile", default=None, help="Comma-separated I/H letters to Nash-check.")
@click.option("--brute-force", is_flag=True, help="Also enumerate all pure equilibria.")
@_add_common
@click.pass_context
@_guarded
def game_cmd(ctx, powers, profile, brute_force, out, fmt, config):
    """Equilibrium classification, optional Nash checks."""
    p = _apply_config(ctx, config, dict(powers=powers, profile=profile, brute_force=brute_force))
    t0 = time.time()
    pw = _parse_powers(p["powers"])
    records = []

    eq = game.classify_equilibrium(pw)
    _, rrev = game.expected_rewards_profile(game.GameInstance(pw, eq.witness))
    records.append({
        "schema_version": SCHEMA_VERSION,
        "record": "classification",
        "powers": ";".join(repr(x) for x in pw),
        "profile": _profile_str(eq.witness),
        "kind": eq.kind.name.lower(),
        "boundary_tie": eq.boundary_tie,
        "rrev": ";".join(repr(x) for x in rrev),
    })

    if p["profile"]:
        try:
            prof = tuple(_STRATEGY_ALIASES[x.strip().lower()] for x in p["profile"].split(","))
        except KeyError as exc:
            raise click.UsageError(f"unknown strategy letter {exc}") from None
        inst = game.GameInstance(pw, prof)
        ok, report = game.is_nash(inst)
        _, rrev = game.expected_rewards_profile(inst)
        records.append({
            "schema_version": SCHEMA_VERSION,
            "record": "profile-check",
            "powers": ";".join(repr(x) for x in pw),
            "profile": _profile_str(prof),
            "is_nash": ok,
            "rrev": ";".join(repr(x) for x in rrev),
            "improving_pools": ";".join(str(r.pool) for r in report if r.improves),
        })

    if p["brute_force"]:
        for prof in sorted(game.brute_force_nash(pw)):
            records.append({
                "schema_version": SCHEMA_VERSION,
                "record": "equilibrium",
                "powers": ";".join(repr(x) for x in pw),
                "profile": _profile_str(prof),
                "is_nash": True,
            })

    _emit(records, _GAME_COLUMNS, fmt, out, _manifest("game", p, None, t0))


_MDP_COLUMNS = [
    "schema_version", "alpha", "beta", "max_len", "tol", "rho_star", "n_states",
    "eval_steps", "eval_rrev", "eval_stderr", "policy_path",
]


@main.command("mdp")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--max-len", type=int, default=20, show_default=True)
@click.option("--tol", type=float, default=1e-5, show_default=True)
@click.option("--policy-out", type=click.Path(dir_okay=False), default=None, help="Write the optimal policy table here.")
@click.option("--evaluate-steps", type=int, default=0, show_default=True, help="Monte Carlo rollout steps (0 = skip).")
@click.option("--seed", type=int, default=0, show_default=True)
@_add_common
@click.pass_context
@_guarded
def mdp_cmd(ctx, alpha, beta, max_len, tol, policy_out, evaluate_steps, seed, out, fmt, config):
    """Optimal withholding-response policy via the ratio MDP."""
    p = _apply_config(ctx, config, dict(
        alpha=alpha, beta=beta, max_len=max_len, tol=tol,
        policy_out=policy_out, evaluate_steps=evaluate_steps, seed=seed,
    ))
    t0 = time.time()
    powers = PowerSplit(p["alpha"], p["beta"])
    problem = mdp.build_mdp(powers, p["max_len"])
    rho_star, policy = mdp.solve_arr(problem, p["tol"])
    rec = {
        "schema_version": SCHEMA_VERSION,
        "alpha": p["alpha"],
        "beta": p["beta"],
        "max_len": p["max_len"],
        "tol": p["tol"],
        "rho_star": rho_star,
        "n_states": problem.n_states,
        "policy_path": p["policy_out"],
    }
    if p["policy_out"]:
        try:
            with open(p["policy_out"], "w") as fh:
                fh.write(mdp.export_policy(policy))
        except OSError as exc:
            raise click.ClickException(f"cannot write policy: {exc}") from exc
    if p["evaluate_steps"]:
        pv = mdp.evaluate_policy(policy, powers, p["evaluate_steps"], p["seed"], mdp=problem)
        rec.update(eval_steps=pv.steps, eval_rrev=pv.rrev, eval_stderr=pv.stderr)
    _emit([rec], _MDP_COLUMNS, fmt, out, _manifest("mdp", p, p["seed"], t0))


_SWEEP_COLUMNS = {
    "dominance": ["schema_version", "alpha", "rrev_sm", "rrev_im", "gap", "transient"],
    "threshold": ["schema_version", "parity", "alpha", "beta_star"],
    "equilibrium": ["schema_version", "m1", "m2", "kind", "boundary_tie", "rrev_1", "rrev_2", "rrev_rest"],
    "revenue": _SIM_COLUMNS,
}


def _sweep_equilibrium_records(m1_grid, m2_grid) -> list[dict]:
    records = []
    for m1 in m1_grid:
        for m2 in m2_grid:
            rest = 1.0 - m1 - m2
            # open domain: at m1 = 1/2 the withholding reward rate has a pole
            if m2 > m1 or m1 >= 0.5 or rest <= 1e-9:
                continue
            # split the honest remainder into pools no larger than m2 so the
            # two strategic pools really are the largest
            k = max(1, int(-(-rest // m2))) if m2 > 0 else 1
            powers = (m1, m2) + (rest / k,) * k
            eq = game.classify_equilibrium(powers)
            _, rrev = game.expected_rewards_profile(game.GameInstance(powers, eq.witness))
            records.append({
                "schema_version": SCHEMA_VERSION,
                "m1": m1,
                "m2": m2,
                "kind": eq.kind.name.lower(),
                "boundary_tie": eq.boundary_tie,
                "rrev_1": rrev[0],
                "rrev_2": rrev[1],
                "rrev_rest": sum(rrev[2:]),
            })
    return records


@main.command()
@click.option("--kind", type=click.Choice(["dominance", "threshold", "equilibrium", "revenue"]), required=True)
@click.option("--grid", default=None, help="start:stop:step (alpha values; dominance/threshold/revenue).")
@click.option("--m1-grid", default=None, help="start:stop:step (equilibrium sweep).")
@click.option("--m2-grid", default=None, help="start:stop:step (equilibrium sweep).")
@click.option("--parity", type=click.Choice(["relative", "unit-relative", "both"]), default="both", show_default=True)
@click.option("--probe", type=click.Choice(["analytic", "sim"]), default="analytic", show_default=True)
@click.option("--mode", type=click.Choice(["insightful", "honest-victim"]), default="insightful", show_default=True)
@click.option("--steps", type=int, default=simulator.DEFAULT_STEPS, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cap", type=int, default=chain_solver.DEFAULT_CAP, show_default=True)
@click.option("--tail-tol", type=float, default=chain_solver.DEFAULT_TAIL_TOL, show_default=True)
@click.option("--workers", type=int, default=None, help=f"Parallel grid workers (default ${_WORKERS_ENV} or 1).")
@_add_common
@click.pass_context
@_guarded
def sweep(ctx, kind, grid, m1_grid, m2_grid, parity, probe, mode, steps, seed, cap, tail_tol, workers, out, fmt, config):
    """Grid datasets: dominance curves, thresholds, equilibrium surface, revenue curves."""
    p = _apply_config(ctx, config, dict(
        kind=kind, grid=grid, m1_grid=m1_grid, m2_grid=m2_grid, parity=parity,
        probe=probe, mode=mode, steps=steps, seed=seed, cap=cap, tail_tol=tail_tol,
        workers=workers if workers is not None else int(os.environ.get(_WORKERS_ENV, "1")),
    ))
    t0 = time.time()
    kind = p["kind"]

    if kind == "dominance":
        if not p["grid"]:
            raise click.UsageError("dominance sweep needs --grid")
        records = [
            {
                "schema_version": SCHEMA_VERSION,
                "alpha": d.alpha,
                "rrev_sm": d.rrev_selfish,
                "rrev_im": d.rrev_insightful,
                "gap": d.gap,
                "transient": d.transient,
            }
            for d in chain_solver.dominance_report(_parse_grid(p["grid"]), p["cap"], p["tail_tol"])
        ]

    elif kind == "threshold":
        if not p["grid"]:
            raise click.UsageError("threshold sweep needs --grid")
        parities = (
            [simulator.Parity.RELATIVE, simulator.Parity.UNIT_RELATIVE]
            if p["parity"] == "both"
            else [simulator.Parity(p["parity"])]
        )
        records = []
        for par in parities:
            for pt in simulator.threshold_sweep(
                _parse_grid(p["grid"]), par, steps=p["steps"], seed=p["seed"],
                probe=p["probe"], cap=p["cap"],
            ):
                records.append({
                    "schema_version": SCHEMA_VERSION,
                    "parity": pt.parity.value,
                    "alpha": pt.alpha,
                    "beta_star": pt.beta_star,
                })

    elif kind == "equilibrium":
        if not (p["m1_grid"] and p["m2_grid"]):
            raise click.UsageError("equilibrium sweep needs --m1-grid and --m2-grid")
        records = _sweep_equilibrium_records(_parse_grid(p["m1_grid"]), _parse_grid(p["m2_grid"]))

    else:  # revenue
        if not p["grid"]:
            raise click.UsageError("revenue sweep needs --grid")
        alphas = _parse_grid(p["grid"])
        seeds = [splitmix64(p["seed"] + i) for i in range(len(alphas))]

        def run(i):
            return _run_simulation(p["mode"], alphas[i], alphas[i], 0.5, p["steps"], seeds[i])

        nworkers = max(1, p["workers"])
        if nworkers == 1:
            records = [run(i) for i in range(len(alphas))]
        else:
            with ThreadPoolExecutor(max_workers=nworkers) as pool:
                records = list(pool.map(run, range(len(alphas))))

    _emit(records, _SWEEP_COLUMNS[kind], fmt, out, _manifest("sweep", p, p["seed"], t0))


if __name__ == "__main__":
    main()
