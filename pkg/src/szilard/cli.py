"""Command-line front end.

Every subcommand accepts ``--format json|csv``, ``--seed``, ``--threads`` and
``--output``. JSON output is ``{"manifest": {...}, "result": {...}}``; CSV output
is a header row plus data rows. With ``--output FILE`` the manifest is also
written to ``FILE.manifest.json`` and ``szilard replay`` re-runs it.

Exit codes: 0 success, 2 usage or validation error, 3 statistical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, engine_a, engine_b, ensemble, entropy, gas, switch
from .core import EngineConfig, StatisticsError, TrialStream, sample_partition, shannon_entropy, trial_generator

SEED_ENV = "SZILARD_SEED"
EXIT_USAGE = 2
EXIT_STATISTICS = 3
DIGITS = 9


class UsageError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    return vals


def _ints(text: str) -> list[int]:
    return [int(round(v)) for v in _floats(text)]


def _round(x):
    if isinstance(x, float):
        return float(f"{x:.{DIGITS}g}") if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.generic):
        return _round(x.item())
    return x


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{DIGITS}g}"
    return str(x)


def _config(args) -> EngineConfig:
    return EngineConfig(args.n, args.l, args.kt)


def _outcome(args, config: EngineConfig):
    if args.sample:
        return sample_partition(config, TrialStream(args.seed, args.trial))
    if args.n_right is None:
        raise UsageError("give --n-right or --sample")
    if not 0 <= args.n_right <= args.n:
        raise UsageError(f"--n-right must lie in [0, {args.n}]")
    return config.outcome(args.n_right)


# -- subcommands ---------------------------------------------------------------
# each returns (result dict, list of CSV rows)


def cmd_model_a(args):
    cfg = _config(args)
    outcome = _outcome(args, cfg)
    res = engine_a.evaluate(cfg, outcome)
    report = engine_a.cycle_report(cfg, outcome)
    shannon = shannon_entropy([outcome.frac_right, outcome.frac_left])
    row = {
        "n": cfg.n_molecules,
        "n_right": outcome.n_right,
        "n_left": outcome.n_left,
        "measurement": report.measurement,
        "max_shift": res.max_shift,
        "shannon_entropy": shannon,
        "work_closed_form": res.work_closed_form,
        "work_quadrature": res.work_quadrature,
        "net_work": report.net_work,
    }
    return {**row, "steps": report.as_dict()["steps"]}, [row]


def cmd_model_b(args):
    cfg = _config(args)
    outcome = _outcome(args, cfg)
    ledger = engine_b.run_cycle_b(cfg, engine_b.RodConfig(args.k), outcome)
    row = {"n": cfg.n_molecules, **ledger.as_dict()}
    row["work_closed_form"] = engine_b.work_closed_form_b(cfg, outcome)
    row.pop("model")
    steps = [{"label": lbl, "work": w} for lbl, w in ledger.to_report().step_works]
    return {**row, "steps": steps}, [row]


def cmd_ensemble(args):
    if not args.n_sweep:
        raise UsageError("--n-sweep must not be empty")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    rows = []
    for s in ensemble.sweep(args.model, args.n_sweep, args.trials, args.seed, args.l, args.kt,
                            workers=args.threads):
        rows.append({"N": s.n_molecules, "mean": s.mean_work, "std_error": s.std_error,
                     "exact_mean": s.exact_mean})
    return {"model": args.model, "trials": args.trials, "rows": rows}, rows


def cmd_entropy(args):
    d = entropy.Decomposition(tuple(args.lambdas), args.base_entropy)
    row = {
        "components": d.n_components,
        "information": d.information,
        "information_bits": d.information_bits,
        "base_entropy": d.base_entropy,
        "partitioned_entropy": entropy.partitioned_entropy(d),
        "max_work": entropy.max_extractable_work(d, args.kt),
    }
    return row, [row]


def cmd_switch(args):
    if (args.eps is None) == (args.bias is None):
        raise UsageError("give exactly one of --eps or --bias")
    if args.eps is not None:
        eps = args.eps
        sw = switch.TwoStateSwitch(switch.min_switch_work(eps, exact=True) if eps < 0.5 else 0.0,
                                   args.barrier, args.tau0)
    else:
        sw = switch.TwoStateSwitch(args.bias, args.barrier, args.tau0)
        eps = switch.encoding_error(sw)
    row = {
        "epsilon": eps,
        "work": switch.min_switch_work(eps, args.kt),
        "work_two_state": switch.min_switch_work(eps, args.kt, exact=True),
        "lifetime": switch.information_lifetime(sw, eps),
        "tau0": args.tau0,
    }
    result = dict(row)
    if args.escape_barriers:
        esc = []
        for eb in args.escape_barriers:
            sim = switch.DoubleWellSim.fixed_curvature(eb, args.curvature, timestep=args.dt,
                                                       temperature=args.kt)
            r = switch.simulate_escape_time(sim, args.trials, args.seed, workers=args.threads)
            esc.append({"barrier": eb, "mfpt": r.mean_first_passage, "std_error": r.std_error,
                        "mfpt_exact": switch.exact_mfpt(sim), "mfpt_kramers": switch.kramers_mfpt(sim)})
        result["escape"] = esc
        if len(esc) >= 2:
            result["arrhenius_slope"] = switch.arrhenius_slope(
                [e["barrier"] for e in esc], [e["mfpt"] for e in esc])
        return result, esc
    return result, [row]


def cmd_gas(args):
    rng = trial_generator(args.seed, 0)
    if args.gas_cmd == "pressure":
        state = gas.GasState.equilibrium(args.n, args.l, rng, args.kt)
        window = gas.window_for(state, args.collisions) if args.n else 1.0
        p = gas.measure_pressure(state, window, rng, min(args.collisions // 2, gas.MIN_COLLISIONS))
        row = {"n": args.n, "length": args.l, "pressure": p,
               "ideal_gas": args.n * args.kt / args.l,
               "ratio": p * args.l / (args.n * args.kt) if args.n else None,
               "collisions": state.collisions}
    elif args.gas_cmd == "piston-work":
        state = gas.GasState.equilibrium(args.n, args.l, rng, args.kt)
        w = gas.quasistatic_piston_work(state, args.final_l, args.steps, rng)
        row = {"n": args.n, "initial_length": args.l, "final_length": args.final_l,
               "steps": args.steps, "work": w,
               "isothermal": gas.isothermal_work(args.n, args.l, args.final_l, args.kt)}
    else:
        counts = gas.split_counts(args.n, args.l, args.samples, rng, thermal_energy=args.kt)
        mean = float(counts.mean())
        var = float(counts.var(ddof=1))
        row = {"n": args.n, "samples": args.samples, "mean_right": mean, "var_right": var,
               "binomial_mean": args.n / 2, "binomial_var": args.n / 4,
               "mean_z": (mean - args.n / 2) / math.sqrt(args.n / 4 / args.samples),
               "var_z": (var - args.n / 4) / (args.n / 4 * math.sqrt(2.0 / (args.samples - 1)))}
    return row, [row]


COMMANDS = {
    "model-a": cmd_model_a,
    "model-b": cmd_model_b,
    "ensemble": cmd_ensemble,
    "entropy": cmd_entropy,
    "switch": cmd_switch,
    "gas": cmd_gas,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=int(os.environ.get(SEED_ENV, "0")))
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--output", help="write result here and the manifest next to it")
    common.add_argument("--kt", type=float, default=1.0, help="thermal energy k_BT")

    engine = argparse.ArgumentParser(add_help=False)
    engine.add_argument("--n", type=int, required=True, help="number of molecules")
    engine.add_argument("--l", type=float, default=1.0, help="box length")
    engine.add_argument("--n-right", type=int, help="molecules right of the partition")
    engine.add_argument("--sample", action="store_true", help="sample the split from --seed")
    engine.add_argument("--trial", type=int, default=0, help="trial index for --sample")

    p = argparse.ArgumentParser(prog="szilard", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    sub.add_parser("model-a", parents=[common, engine], help="feedback engine cycle")
    b = sub.add_parser("model-b", parents=[common, engine], help="twin-piston engine ledger")
    b.add_argument("--k", type=float, default=1e4, help="rod spring constant")

    e = sub.add_parser("ensemble", parents=[common], help="mean work over a sweep of N")
    e.add_argument("--model", type=str.upper, choices=("A", "B"), default="A")
    e.add_argument("--n-sweep", type=_ints, required=True)
    e.add_argument("--trials", type=int, default=100_000)
    e.add_argument("--l", type=float, default=1.0)

    en = sub.add_parser("entropy", parents=[common], help="partitioned phase-space entropy")
    en.add_argument("--lambdas", type=_floats, required=True)
    en.add_argument("--base-entropy", type=float, default=0.0)

    s = sub.add_parser("switch", parents=[common], help="switch work, lifetime, escape times")
    s.add_argument("--eps", type=float)
    s.add_argument("--bias", type=float)
    s.add_argument("--tau0", type=float, default=1.0)
    s.add_argument("--barrier", type=float, default=5.0)
    s.add_argument("--escape-barriers", type=_floats)
    s.add_argument("--curvature", type=float, default=8.0)
    s.add_argument("--dt", type=float, default=2e-3)
    s.add_argument("--trials", type=int, default=1000)

    g = sub.add_parser("gas", help="kinetic ideal-gas oracle")
    gsub = g.add_subparsers(dest="gas_cmd", required=True)
    gp = gsub.add_parser("pressure", parents=[common])
    gp.add_argument("--collisions", type=int, default=2_000_000)
    gw = gsub.add_parser("piston-work", parents=[common])
    gw.add_argument("--final-l", type=float, required=True)
    gw.add_argument("--steps", type=int, default=1000)
    gs = gsub.add_parser("split-stats", parents=[common])
    gs.add_argument("--samples", type=int, default=2000)
    for q in (gp, gw, gs):
        q.add_argument("--n", type=int, required=True)
        q.add_argument("--l", type=float, default=1.0)

    r = sub.add_parser("replay", help="re-run a saved manifest")
    r.add_argument("manifest")
    r.add_argument("--output")
    r.add_argument("--threads", type=int, help="override the worker count; results do not depend on it")
    return p


def _validate(args) -> None:
    if getattr(args, "l", 1.0) <= 0:
        raise UsageError("--l must be positive")
    if args.kt <= 0:
        raise UsageError("--kt must be positive")
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 0:
        raise UsageError("--n must be non-negative")
    if args.subcommand in ("model-a", "model-b") and args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.threads < 1:
        raise UsageError("--threads must be positive")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.isoformat(timespec="seconds")


def make_manifest(args) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("output",)}
    return {
        "subcommand": args.subcommand,
        "parameters": params,
        "master_seed": args.seed,
        "version": __version__,
        "timestamp": _timestamp(),
    }


def render(fmt: str, manifest: dict, result: dict, rows: list[dict]) -> str:
    if fmt == "json":
        return json.dumps({"manifest": manifest, "result": _round(result)}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rows[0]))
    for row in rows:
        w.writerow([_cell(v) for v in row.values()])
    return buf.getvalue()


def execute(args, manifest: dict | None = None) -> str:
    _validate(args)
    result, rows = COMMANDS[args.subcommand](args)
    if manifest is None:
        manifest = make_manifest(args)
    text = render(args.format, manifest, result, rows)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        with open(args.output + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
    return text


def _from_manifest(path: str, output: str | None, threads: int | None):
    with open(path) as fh:
        manifest = json.load(fh)
    params = dict(manifest["parameters"])
    params["output"] = output
    if threads is not None:
        params["threads"] = threads
    return argparse.Namespace(**params), manifest


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        manifest = None
        if args.subcommand == "replay":
            # the saved manifest is echoed verbatim so the whole output is reproducible
            args, manifest = _from_manifest(args.manifest, args.output, args.threads)
        sys.stdout.write(execute(args, manifest))
    except StatisticsError as exc:
        print(f"szilard: statistical failure: {exc}", file=sys.stderr)
        return EXIT_STATISTICS
    except (ValueError, OSError, KeyError) as exc:
        print(f"szilard: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
