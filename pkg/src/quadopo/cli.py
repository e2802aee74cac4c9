"""Command-line entry point: ``quadopo <subcommand> [options]``.

Every subcommand writes CSV (header row, '.' decimals, 17 significant digits)
preceded by one ``#`` comment line carrying the tool version and the fully
resolved parameters. Exit status: 0 success, 1 computation error, 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import __version__
from .analytic import Method, figure_grid, v3_closed_form, vlf_series
from .errors import DomainError, QuadOPOError, SymmetryError
from .meanfield import relax, residual, steady_state
from .model import SystemParams, load_config, params_from_mapping, threshold_pump
from .spectra import (
    check_pump_ratios,
    linearize,
    scan_frequency,
    scan_pump,
    stability,
)
from .stochastic import run_ensemble

# default parameter set (eps at 0.8 of threshold), used when no config is given
DEFAULTS = {"chi": 1e-2, "eps": 400.0, "gamma": 10.0, "kappa": 1.0}


class UsageError(Exception):
    pass


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value) + 0.0, ".17g")


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return value


def _int_at_least(lower: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if value < lower:
            raise argparse.ArgumentTypeError(f"must be >= {lower}: {text}")
        return value
    return parse


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def _add_param_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value parameter file")
    for name in ("chi", "eps", "gamma", "kappa"):
        p.add_argument(f"--{name}", type=float, help=f"set {name} for all four modes")
    p.add_argument("--eps-ratio", type=float, help="drive as a multiple of the threshold")
    p.add_argument("--output", "-o", help="write CSV here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadopo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"quadopo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="undepleted-pump VLF correlations versus time")
    p.add_argument("--mode", choices=["equal", "paired", "general"], default="equal")
    p.add_argument("--xi", type=_float_list, default=[1.0],
                   help="coupling (equal), first coupling (paired) or four couplings (general)")
    p.add_argument("--xi-ratio", type=float, default=0.5, help="paired mode: xi2 / xi1")
    p.add_argument("--tmax", type=_positive_float, default=3.0, help="largest xi1*t")
    p.add_argument("--points", type=_int_at_least(1), default=300)
    p.add_argument("--output", "-o")

    for name, text in (("steady", "classical steady state"),
                       ("stability", "drift-matrix eigenvalues")):
        p = sub.add_parser(name, help=text)
        _add_param_args(p)

    p = sub.add_parser("spectrum", help="output VLF spectra versus frequency")
    _add_param_args(p)
    p.add_argument("--omega-max", type=_positive_float, default=10.0)
    p.add_argument("--points", type=_int_at_least(1), default=200)

    p = sub.add_parser("scan-pump", help="minimum output correlations versus eps/eps_c")
    _add_param_args(p)
    p.add_argument("--ratios", type=_float_list, default=[0.3, 0.5, 0.8, 0.95, 1.1, 1.5, 2, 3, 5])
    p.add_argument("--omega-max", type=_positive_float, default=10.0)
    p.add_argument("--points", type=_int_at_least(1), default=200)

    p = sub.add_parser("sde", help="positive-P trajectory ensemble")
    _add_param_args(p)
    p.add_argument("--traj", type=_int_at_least(2), default=1000)
    p.add_argument("--tfinal", type=_positive_float, default=20.0)
    p.add_argument("--dt", type=_positive_float, default=None,
                   help="time step (default 0.05 / largest loss rate)")
    p.add_argument("--seed", type=_int_at_least(0), default=0)
    return parser


def resolve_params(args) -> SystemParams:
    values = dict(DEFAULTS)
    if args.config:
        try:
            loaded = load_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        values = loaded if loaded else values
        for name, default in DEFAULTS.items():
            if name not in values and not all(f"{name}{k}" in values for k in range(1, 5)):
                values[name] = default
    for name in DEFAULTS:
        flag = getattr(args, name, None)
        if flag is not None:
            values = {k: v for k, v in values.items() if not (k.startswith(name) and k[len(name):].isdigit())}
            values[name] = flag
    params = params_from_mapping(values)
    if getattr(args, "eps_ratio", None) is not None:
        params = params.with_pump_ratio(args.eps_ratio)
    return params


def _header(command: str, params: SystemParams | None, extra: dict) -> str:
    items = [f"quadopo {__version__}", f"command={command}"]
    if params is not None:
        items += [f"{k}={fmt(v)}" for k, v in params.as_dict().items()]
    items += [f"{k}={fmt(v)}" for k, v in extra.items()]
    return "# " + " ".join(items) + "\n"


def _write(args, header: str, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(header)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if getattr(args, "output", None):
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_analytic(args) -> None:
    xi = args.xi
    if args.mode == "equal":
        if len(xi) != 1:
            raise UsageError("equal mode takes a single --xi")
        couplings, method = [xi[0]] * 4, Method.CLOSED_EQUAL
    elif args.mode == "paired":
        if len(xi) != 1:
            raise UsageError("paired mode takes a single --xi (first coupling)")
        b = xi[0] * args.xi_ratio
        couplings, method = [xi[0], xi[0], b, b], Method.CLOSED_PAIRED
    else:
        if len(xi) != 4:
            raise UsageError("general mode needs four comma-separated couplings")
        couplings, method = xi, Method.GENERAL
    ref = couplings[0] if couplings[0] > 0 else 1.0
    times = np.concatenate([[0.0], figure_grid(ref, args.points, args.tmax)])
    rows = vlf_series(couplings, times, method)
    columns = ["t", "V56", "V67", "V78", "g5", "g6", "g7", "g8"]
    if args.mode == "equal":
        columns.append("v3_closed_form")
        for r in rows:
            r["v3_closed_form"] = v3_closed_form(couplings[0], r["t"])
    extra = {"mode": args.mode, "xi": ",".join(fmt(x) for x in couplings)}
    _write(args, _header("analytic", None, extra), columns, ([r[c] for c in columns] for r in rows))


def _steady_for(params: SystemParams) -> tuple[np.ndarray, str]:
    if params.is_symmetric:
        st = steady_state(params)
        return st.alpha, st.regime.value
    seed = np.zeros(8, dtype=complex)
    seed[:4] = params.eps / params.gamma
    seed[4:] = 1e-3
    return relax(params, seed), "relaxed"


def cmd_steady(args) -> None:
    params = resolve_params(args)
    alpha, regime = _steady_for(params)
    columns = [f"alpha{k}_{part}" for k in range(1, 9) for part in ("re", "im")]
    columns += ["regime", "residual"]
    row = [v for z in alpha for v in (z.real, z.imag)] + [regime, residual(alpha, params)]
    _write(args, _header("steady", params, {}), columns, [row])


def cmd_stability(args) -> None:
    params = resolve_params(args)
    alpha, regime = _steady_for(params)
    rep = stability(linearize(params, alpha))
    extra = {"regime": regime, "stable": rep.is_stable, "neutral_modes": rep.n_neutral}
    rows = [(k, lam.real, lam.imag, rep.is_stable) for k, lam in enumerate(rep.eigenvalues)]
    _write(args, _header("stability", params, extra), ["k", "re", "im", "stable"], rows)


def cmd_spectrum(args) -> None:
    params = resolve_params(args)
    alpha, regime = _steady_for(params)
    sys_ = linearize(params, alpha)
    stable = stability(sys_).is_stable
    grid = np.linspace(0.0, args.omega_max, args.points)
    table = scan_frequency(sys_, grid)
    rows = [(r.omega, r.i56, r.i67, r.i78, *r.gains, stable) for r in table]
    columns = ["omega", "I56", "I67", "I78", "g5", "g6", "g7", "g8", "stable"]
    _write(args, _header("spectrum", params, {"regime": regime}), columns, rows)


def cmd_scan_pump(args) -> None:
    try:
        ratios = check_pump_ratios(args.ratios)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    params = resolve_params(args)
    grid = np.linspace(0.0, args.omega_max, args.points)
    out = scan_pump(params, ratios, grid)
    rows = [(r.ratio, r.i56, r.i67, r.i78, *r.gains, r.stable) for r in out]
    columns = ["ratio", "I56", "I67", "I78", "g5", "g6", "g7", "g8", "stable"]
    _write(args, _header("scan-pump", params, {"eps_c": threshold_pump(params)}), columns, rows)


def cmd_sde(args) -> None:
    params = resolve_params(args)
    dt = args.dt if args.dt is not None else 0.05 / float(np.max(params.losses))
    alpha, _ = _steady_for(params)
    m = run_ensemble(params, args.traj, args.tfinal, dt, seed=args.seed, initial=alpha)
    names = [f"a{k}" if v == 0 else f"a{k}+" for k in range(1, 9) for v in (0, 1)]
    rows = [(f"mean({names[i]})", m.mean[i].real, m.mean[i].imag, m.mean_stderr[i])
            for i in range(16)]
    for i in range(8, 16):
        for j in range(i, 16):
            rows.append((f"cov({names[i]},{names[j]})", m.covariance[i, j].real,
                         m.covariance[i, j].imag, m.second_stderr[i, j]))
    rows.append(("n_traj", m.n_traj, 0, 0))
    rows.append(("n_diverged", m.n_diverged, 0, 0))
    extra = {"traj": args.traj, "tfinal": args.tfinal, "dt": dt, "seed": args.seed}
    _write(args, _header("sde", params, extra), ["quantity", "re", "im", "stderr"], rows)


COMMANDS = {
    "analytic": cmd_analytic,
    "steady": cmd_steady,
    "stability": cmd_stability,
    "spectrum": cmd_spectrum,
    "scan-pump": cmd_scan_pump,
    "sde": cmd_sde,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except (UsageError, DomainError, SymmetryError) as exc:
        parser.print_usage(sys.stderr)
        print(f"quadopo {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except QuadOPOError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> int:
    return run(sys.argv[1:])
