"""Command-line front end: reproduces the headline numbers and exports
plot-ready CSV/JSON. Canonical units (hbar = 1) throughout; headers state units."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import criterion as crit
from . import dynamics, sampling, spectral, states
from .grids import GridSpec
from .modvar import H_PLANCK, ModularScale, squeezing_s1, squeezing_s2

TABLE1_RANKS = (1, 2, 3, 4, 10, 100)


class CliError(Exception):
    pass


def _write_output(text: str, output: str | None):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _envelope(args) -> states.Envelope:
    return states.GaussianEnvelope(sigma_x=args.sigma)


# ---------------------------------------------------------------------------
# subcommands


def cmd_table1(args) -> str:
    rows = [(n, squeezing_s1(n), squeezing_s2(n)) for n in TABLE1_RANKS]
    if args.format == "json":
        return json.dumps(
            [{"N": n, "S1": round(s1, 2), "S2": round(s2, 2)} for n, s1, s2 in rows]
        ) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["N", "S1", "S2"])
    for n, s1, s2 in rows:
        w.writerow([n, f"{s1:.2f}", f"{s2:.2f}"])
    return buf.getvalue()


def cmd_constant(args) -> str:
    out = {}
    if args.method in ("kummer", "all"):
        rep = spectral.solve_c()
        out["kummer"] = {
            "c": rep.c,
            "spectrum_head": rep.mu_spectrum_head,
            "residual": rep.residual,
        }
    if args.method in ("perturbative", "all"):
        out["perturbative"] = {"c": spectral.perturbative_c()}
    if args.method in ("brute", "all"):
        rep = spectral.brute_force_c(
            periods=args.periods, points_per_period=args.points_per_period
        )
        out["brute"] = {
            "c": rep.c,
            "spectrum_head": rep.mu_spectrum_head,
            "residual": rep.residual,
        }
    return json.dumps(out, sort_keys=True, indent=2) + "\n"


def _state_descriptor(args) -> dict:
    d = {"kind": args.state, "N": args.N, "envelope": {"kind": "gaussian", "sigma_x": args.sigma}}
    if args.state == "multislit":
        d["L"] = args.L
    else:
        d.update({"x0": args.x0, "N0": args.N0, "lambda": args.lam})
    if args.state == "admixture":
        d["epsilon"] = args.epsilon
    return d


def cmd_fringes(args) -> str:
    desc = _state_descriptor(args)
    state = states.state_from_descriptor(desc)
    buf = io.StringIO()
    w = csv.writer(buf)
    if isinstance(state, states.SuperposedState):
        if args.state == "multislit":
            # momentum-space fringe profile, period h/L
            per = H_PLANCK / args.L
            p = np.linspace(-args.periods / 2 * per, args.periods / 2 * per, args.grid_points)
            dens = states.momentum_density(state, p)
            w.writerow(["p [hbar=1]", "density"])
            rows = zip(p, dens)
        else:
            x = np.linspace(
                args.x0 - args.periods / 2 * args.lam,
                args.x0 + args.periods / 2 * args.lam,
                args.grid_points,
            )
            dens = states.position_density(state, x)
            w.writerow(["x [length]", "density"])
            rows = zip(x, dens)
    else:
        # relative-coordinate cut through the joint density at the envelope centers
        r = np.linspace(-args.periods / 2 * args.lam, args.periods / 2 * args.lam, args.grid_points)
        dens = states.joint_position_density(state, args.x0 + r / 2, -args.x0 - r / 2)
        w.writerow(["x1_minus_x2_offset [length]", "joint_density"])
        rows = zip(r, dens)
    for a, b in rows:
        w.writerow([repr(float(a)), repr(float(b))])
    return buf.getvalue()


def cmd_criterion(args) -> str:
    desc = _state_descriptor(args)
    state = states.state_from_descriptor(desc)
    scale = ModularScale(args.lam)
    report = crit.evaluate_criterion(state, scale, axis=args.axis)
    return report.to_json() + "\n"


def cmd_robustness(args) -> str:
    closed = crit.robustness_threshold(args.N, method="closed_form")
    out = {"N": args.N, "epsilon_star_closed_form": closed}
    if args.bisection:
        out["epsilon_star_bisection"] = crit.robustness_threshold(args.N, method="bisection")
    out["visibility_at_threshold"] = crit.visibility_of_admixture(closed, args.N)
    return json.dumps(out, sort_keys=True, indent=2) + "\n"


def cmd_sample(args) -> str:
    desc = _state_descriptor(args)
    state = states.state_from_descriptor(desc)
    scale = ModularScale(args.lam)
    pos = sampling.sample_measurements(state, "position", args.n, args.seed)
    mom = sampling.sample_measurements(state, "momentum", args.n, args.seed + 1)
    report = sampling.estimate_criterion(pos, mom, scale)
    return report.to_json() + "\n"


def cmd_propagate(args) -> str:
    desc = _state_descriptor(args)
    state = states.state_from_descriptor(desc)
    if not isinstance(state, states.SuperposedState):
        raise CliError("propagate expects a single-particle state")
    spec = GridSpec(points=args.grid_points, xmin=args.xmin, xmax=args.xmax)
    gs = states.discretize(state, spec)
    params = dynamics.PropagationParams(mass=args.mass, time=args.time)
    moved = dynamics.free_propagate(gs, params)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["x [length]", "re", "im", "density"])
    for xv, amp in zip(moved.spec.x, moved.psi):
        w.writerow([repr(float(xv)), repr(float(amp.real)), repr(float(amp.imag)), repr(float(abs(amp) ** 2))])
    return buf.getvalue()


def cmd_protocol(args) -> str:
    env = states.GaussianEnvelope(sigma_x=args.sigma)
    staggers = np.linspace(0.0, args.max_stagger, args.steps)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["stagger [time]", "visibility"])
    for s in staggers:
        spec = dynamics.ProtocolSpec(
            N=args.N,
            emission_times=tuple(n * s for n in range(args.N)),
            lam=args.lam,
            envelope=env,
            mass=args.mass,
        )
        vis = dynamics.protocol_visibility(spec, args.meeting_time)
        w.writerow([repr(float(s)), repr(float(vis))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument plumbing


def _add_state_options(p, two_particle_default="mpe"):
    p.add_argument("--state", default=two_particle_default,
                   choices=["multislit", "smp", "mpe", "classical", "admixture"])
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--L", type=float, default=1.0, help="slit separation (multislit)")
    p.add_argument("--lam", type=float, default=1.0, help="fringe period lambda")
    p.add_argument("--sigma", type=float, default=3.0, help="gaussian envelope width")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--N0", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.0, help="classical admixture fraction")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="modint",
        description="Modular-variable interference and entanglement toolkit (hbar = 1)",
    )
    ap.add_argument("--config", help="key=value config file; flags override it")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", help="squeezing functions S1, S2 at the reference ranks")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("constant", help="criterion constant c")
    p.add_argument("--method", choices=["kummer", "brute", "perturbative", "all"], default="all")
    p.add_argument("--periods", type=int, default=32)
    p.add_argument("--points-per-period", type=int, default=128)
    p.set_defaults(func=cmd_constant)

    p = sub.add_parser("fringes", help="density profile CSV for a state")
    _add_state_options(p)
    p.add_argument("--grid-points", type=int, default=1024)
    p.add_argument("--periods", type=float, default=4.0, help="profile window in fringe periods")
    p.set_defaults(func=cmd_fringes)

    p = sub.add_parser("criterion", help="separability criterion report")
    _add_state_options(p)
    p.add_argument("--axis", choices=["momentum", "position"], default="momentum")
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("robustness", help="classical-admixture threshold")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--bisection", action="store_true", help="also run the mixture bisection")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("sample", help="Monte Carlo measurement simulation + estimate")
    _add_state_options(p)
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("propagate", help="free propagation of a single-particle state")
    _add_state_options(p, two_particle_default="multislit")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--grid-points", type=int, default=16384)
    p.add_argument("--xmin", type=float, default=-128.0)
    p.add_argument("--xmax", type=float, default=128.0)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("protocol", help="staggered-emission visibility sweep CSV")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=8.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--meeting-time", type=float, default=60.0)
    p.add_argument("--max-stagger", type=float, default=40.0)
    p.add_argument("--steps", type=int, default=9)
    p.set_defaults(func=cmd_protocol)

    for sp in sub.choices.values():
        sp.add_argument("--output", help="write output to a file instead of stdout")
    ap.set_defaults(_subcommands=sub.choices)
    return ap


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Prepend config-file key=value pairs as flags (explicit flags win)."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    try:
        path = argv[i + 1]
    except IndexError:
        raise CliError("--config requires a file path") from None
    rest = argv[:i] + argv[i + 2 :]
    if not rest:
        raise CliError("config file requires a subcommand on the command line")
    subcommands = parser.get_default("_subcommands")
    subparser = subcommands.get(rest[0])
    if subparser is None:
        raise CliError(f"unknown subcommand {rest[0]!r}")
    known = {s: a for a in subparser._actions for s in a.option_strings}
    extra = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = f"--{key.replace('_', '-')}"
            action = known.get(flag)
            if action is None:
                raise CliError(f"{path}:{lineno}: unknown config key {key!r}")
            if action.nargs == 0:  # boolean switch
                if value.lower() in ("1", "true", "yes", "on"):
                    extra.append(flag)
                elif value.lower() not in ("0", "false", "no", "off"):
                    raise CliError(f"{path}:{lineno}: expected a boolean for {key!r}")
            else:
                extra += [flag, value]
    # config keys go right after the subcommand so later explicit flags override
    return [rest[0]] + extra + rest[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        text = args.func(args)
        _write_output(text, args.output)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
