"""Command-line front end.

Every artifact is written next to a ``<stem>.manifest.json`` that records the
resolved configuration; ``skewshift replay MANIFEST`` re-runs it.

Exit codes: 0 success or criterion pass, 1 criterion fail, 2 usage error,
3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _backend
from . import io as sio
from .cocycle import CocycleParams, finite_exponent_u
from .grid import GridSpec, default_threads
from .lyapunov import (
    BAD_FRACTION,
    bad_slice_search,
    grid_integrate,
    mc_integrate,
    run_criterion,
    slice_profile,
)
from .phase import FrequencyOmega, TorusCoordinate, TorusPoint, golden_mean
from .spectrum import (
    MAX_FULL_SPECTRUM,
    build_hamiltonian,
    eigen_histogram,
    eigenvalues_bisection,
    grid_spectra,
    max_gap,
    modal_energy,
    residual_distance,
    window_counts,
)

log = logging.getLogger("skewshift")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3
OUT_ENV = "SKEWSHIFT_OUT"


class UsageError(Exception):
    pass


class NumericalGuardError(ArithmeticError):
    """A computed quantity came out non-finite or otherwise impossible."""


def _guard(name, value):
    if not np.all(np.isfinite(value)):
        raise NumericalGuardError(f"{name} is not finite: {value!r}")
    return value


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


def _common(p: argparse.ArgumentParser, energy=True, lam=True):
    g = p.add_argument_group("common")
    if lam:
        g.add_argument("--lambda", dest="lam", type=float, help="coupling lambda >= 0")
    if energy:
        g.add_argument("--energy", type=float, help="energy E (decimal, round-trips 17 digits)")
    g.add_argument("--omega-fraction", type=int, default=None,
                   help="omega as an integer multiple of 2**-64 (default: golden mean)")
    g.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    g.add_argument("--name", default=None, help="artifact file stem")
    g.add_argument("--threads", type=int, default=None, help="worker threads (never changes results)")
    g.add_argument("--backend", choices=["cython", "python"], default=None)
    g.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")
    g.add_argument("--log-level", default="WARNING")


def _grid_flags(p, required_help="grid points per axis"):
    p.add_argument("--grid", type=int, default=None, help=required_help)
    p.add_argument("--periodic", action="store_true", default=False,
                   help="sample i/G instead of i/(G-1)")


def build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="skewshift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = []

    p = sub.add_parser("lyapunov", help="L_n by grid or Monte-Carlo integration")
    _common(p)
    p.add_argument("--n", type=int, default=None)
    _grid_flags(p)
    p.add_argument("--mc", type=int, default=None, help="number of Monte-Carlo points")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--checkpoint", default=None, help="resumable state file for grid sweeps")
    p.add_argument("--checkpoint-rows", type=int, default=100)
    leaves.append(p)

    p = sub.add_parser("criterion", help="finite-size positivity criterion at N0 and 2 N0")
    _common(p)
    p.add_argument("--n0", type=int, default=None)
    _grid_flags(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--checkpoint-rows", type=int, default=100)
    leaves.append(p)

    p = sub.add_parser("slice", help="u_n along a horizontal or vertical line")
    _common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--axis", choices=["x", "y"], default="x")
    p.add_argument("--fixed", type=float, default=None, help="value of the other coordinate")
    p.add_argument("--resolution", type=int, default=1001)
    p.add_argument("--periodic", action="store_true", default=False)
    leaves.append(p)

    sp = sub.add_parser("spectrum", help="eigenvalue pipelines of H_N")
    ssub = sp.add_subparsers(dest="action", required=True)

    p = ssub.add_parser("histogram", help="eigenvalue histogram over a grid")
    _common(p, energy=False)
    p.add_argument("--n", type=int, default=None)
    _grid_flags(p)
    p.add_argument("--bins", type=int, default=1200)
    p.add_argument("--span", type=float, default=None, help="bins cover [-span, span] (default 2 + 2 lambda)")
    p.add_argument("--tol", type=float, default=1e-10)
    leaves.append(p)

    p = ssub.add_parser("modal", help="most frequent rounded eigenvalue over a grid")
    _common(p, energy=False)
    p.add_argument("--n", type=int, default=None)
    _grid_flags(p)
    p.add_argument("--digits", type=int, default=8)
    p.add_argument("--window", type=_pair, default=None, help="restrict to energies in [a, b); write --window=-2.5,-2.4")
    leaves.append(p)

    p = ssub.add_parser("gap", help="largest gap of the union of grid spectra inside an interval")
    _common(p, energy=False)
    p.add_argument("--n", type=int, default=None)
    _grid_flags(p)
    p.add_argument("--interval", type=_pair, default=None, help="a,b (write --interval=-1,1 for a negative a)")
    p.add_argument("--tol", type=float, default=1e-10)
    leaves.append(p)

    p = ssub.add_parser("residual", help="residual bound on dist(E, spec H_N)")
    _common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--point", type=_pair, default=None, help="x,y of the Hamiltonian")
    _grid_flags(p, "search this grid for the point whose spectrum lies nearest E")
    p.add_argument("--search-width", type=float, default=1e-6)
    p.add_argument("--iterations", type=int, default=3)
    leaves.append(p)

    p = ssub.add_parser("badslice", help="eigenvalue construction of a bad-set point")
    _common(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--anchor", type=_pair, default=(0.5, 0.5))
    p.add_argument("--point", type=_pair, default=None,
                   help="with --energy: evaluate this pair directly instead of searching")
    p.add_argument("--search-grid", type=int, default=41)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--reference-grid", type=int, default=128)
    leaves.append(p)

    p = ssub.add_parser("eigenvalues", help="dump the spectrum of one H_N")
    _common(p, energy=False)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--point", type=_pair, default=None)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--window", type=_pair, default=None)
    leaves.append(p)

    p = sub.add_parser("replay", help="re-run the configuration stored in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.add_argument("--log-level", default="WARNING")
    leaves.append(p)
    return parser, leaves


def _dest_names(p: argparse.ArgumentParser) -> set[str]:
    return {a.dest for a in p._actions if a.dest != "help"}


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            cfg = json.loads(Path(known.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            parser.error(f"cannot read config {known.config}: {e}")
        if not isinstance(cfg, dict):
            parser.error("config must be a JSON object")
        cfg = {k.lstrip("-").replace("-", "_"): v for k, v in cfg.items()}
        cfg = {("lam" if k == "lambda" else k): v for k, v in cfg.items()}
        allowed = set().union(*(_dest_names(p) for p in leaves))
        unknown = set(cfg) - allowed - {"command", "action"}
        if unknown:
            parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
        for p in leaves:
            names = _dest_names(p)
            p.set_defaults(**{k: v for k, v in cfg.items() if k in names})
    args = parser.parse_args(argv)
    args.argv = argv
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + ("lambda" if n == "lam" else n.replace("_", "-")) for n in missing)
        raise UsageError(f"{args.command}: missing required {flags}")


def _omega(args) -> FrequencyOmega:
    if args.omega_fraction is None:
        return golden_mean()
    return FrequencyOmega.from_fraction_int(args.omega_fraction)


def _params(args) -> CocycleParams:
    if args.lam is None or not math.isfinite(args.lam) or args.lam < 0:
        raise UsageError("--lambda must be a finite number >= 0")
    energy = getattr(args, "energy", None)
    energy = 0.0 if energy is None else energy
    if not math.isfinite(energy):
        raise UsageError("--energy must be finite")
    return CocycleParams(args.lam, energy, _omega(args))


def _grid(args) -> GridSpec:
    if args.grid is None or args.grid < 2:
        raise UsageError("--grid must be an integer >= 2")
    return GridSpec(args.grid, inclusive_endpoints=not args.periodic)


def _point(pair) -> TorusPoint:
    return TorusPoint.from_reals(repr(pair[0]), repr(pair[1]))


def _threads(args) -> int:
    t = args.threads if args.threads is not None else default_threads()
    if t < 1:
        raise UsageError("--threads must be positive")
    return t


def _positive(args, *names):
    for n in names:
        v = getattr(args, n)
        if v is not None and v < 1:
            raise UsageError(f"--{n.replace('_', '-')} must be positive")


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or ".")


def _snapshot(args) -> dict:
    skip = {"argv", "config", "out"}
    return {k: v for k, v in vars(args).items() if k not in skip}


class _Run:
    """Collects artifacts of one command and writes their manifests."""

    def __init__(self, args, default_stem: str):
        self.args = args
        self.dir = _out_dir(args)
        self.stem = args.name or default_stem
        self.t0 = time.perf_counter()
        self.outputs: list[Path] = []

    def path(self, suffix: str) -> Path:
        return self.dir / (self.stem + suffix)

    def add(self, path: Path):
        self.outputs.append(Path(path))

    def finish(self, grid: GridSpec | None = None, mc: dict | None = None, seed=None):
        a = self.args
        lam = getattr(a, "lam", None)
        energy = getattr(a, "energy", None)
        manifest = sio.RunManifest(
            command_line=["skewshift", *a.argv],
            config=_snapshot(a),
            omega_fraction=_omega(a).frac.frac,
            lam=None if lam is None else sio.decimal17(lam),
            energy=None if energy is None else sio.decimal17(energy),
            grid=sio.grid_record(grid),
            mc=mc,
            seed=seed,
            backend=a.backend or _backend.NAME,
            wall_time=time.perf_counter() - self.t0,
            workers=_threads(a),
            outputs=[p.name for p in self.outputs],
        )
        for p in self.outputs:
            sio.write_manifest(p, manifest)
        for p in self.outputs:
            print(p)


def cmd_lyapunov(args) -> int:
    _require(args, "lam", "energy", "n")
    _positive(args, "n", "mc", "checkpoint_rows")
    if (args.grid is None) == (args.mc is None):
        raise UsageError("lyapunov: give exactly one of --grid or --mc")
    if args.mc is not None and args.seed is None:
        raise UsageError("lyapunov: --mc needs --seed")
    if args.mc is not None and (args.periodic or args.checkpoint):
        raise UsageError("lyapunov: --periodic and --checkpoint apply to grid runs only")
    params = _params(args)
    threads = _threads(args)
    run = _Run(args, "lyapunov")
    if args.mc is not None:
        est = mc_integrate(params, args.n, args.mc, args.seed, threads=threads, backend=args.backend)
        grid, mc = None, {"points": args.mc, "seed": args.seed, "generator": "Philox4x64"}
    else:
        grid = _grid(args)
        kw = {"backend": args.backend}
        if args.checkpoint:
            kw.update(checkpoint=args.checkpoint, checkpoint_rows=args.checkpoint_rows)
        est = grid_integrate(params, args.n, grid, threads=threads, **kw)
        mc = None
    _guard("L_n", est.value)
    rec = sio.estimate_record(est)
    run.add(sio.write_json(run.path(".json"), rec))
    run.finish(grid, mc, args.seed)
    log.info("L_%d = %.17g", est.n, est.value)
    return EXIT_OK


def cmd_criterion(args) -> int:
    _require(args, "lam", "energy", "n0")
    _positive(args, "n0", "checkpoint_rows")
    params, grid = _params(args), _grid(args)
    kw = {"backend": args.backend}
    if args.checkpoint:
        kw.update(checkpoint=args.checkpoint, checkpoint_rows=args.checkpoint_rows)
    run = _Run(args, "criterion")
    verdict, ests, reports = run_criterion(params, args.n0, grid, threads=_threads(args), **kw)
    _guard("L_N0", verdict.L_n0)
    _guard("L_2N0", verdict.L_2n0)
    rec = {
        "params": sio.params_record(params),
        "grid": sio.grid_record(grid),
        "verdict": sio.verdict_record(verdict),
        "estimates": [sio.estimate_record(e) for e in ests],
        "bad_sets": [sio.bad_set_record(r) for r in reports],
    }
    run.add(sio.write_json(run.path(".json"), rec))
    run.finish(grid)
    label = "rehearsal" if verdict.rehearsal else "theorem-scale"
    print(f"criterion {'PASS' if verdict.passed else 'FAIL'} ({label}): "
          f"L_N0={verdict.L_n0:.6g} drop={verdict.drop_ratio:.3g}")
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_slice(args) -> int:
    _require(args, "lam", "energy", "n", "fixed")
    _positive(args, "n")
    params = _params(args)
    run = _Run(args, f"slice_{args.axis}")
    prof = slice_profile(params, args.n, args.axis, TorusCoordinate.from_real(repr(args.fixed)), args.resolution,
                         inclusive_endpoints=not args.periodic, backend=args.backend)
    _guard("u_n", prof.values)
    run.add(sio.write_slice_csv(run.path(".csv"), prof))
    run.finish(GridSpec(args.resolution, not args.periodic))
    return EXIT_OK


def cmd_histogram(args) -> int:
    _require(args, "lam", "n")
    _positive(args, "n", "bins")
    lam, grid = _params(args).lam, _grid(args)
    run = _Run(args, "histogram")
    hist = eigen_histogram(lam, _omega(args), args.n, grid, bins=args.bins, span=args.span, tol=args.tol,
                           threads=_threads(args), backend=args.backend)
    if hist.total != grid.size * args.n:
        raise NumericalGuardError(f"histogram holds {hist.total} eigenvalues, expected {grid.size * args.n}")
    run.add(sio.write_histogram_csv(run.path(".csv"), hist))
    run.finish(grid)
    return EXIT_OK


def cmd_modal(args) -> int:
    _require(args, "lam", "n")
    _positive(args, "n")
    lam, grid = _params(args).lam, _grid(args)
    run = _Run(args, "modal")
    res = modal_energy(lam, _omega(args), args.n, grid, rounding_digits=args.digits, window=args.window,
                       threads=_threads(args), backend=args.backend)
    run.add(sio.write_csv(run.path(".csv"), ["energy", "multiplicity", "digits"],
                          [(f"{res.energy:.{args.digits}f}", res.multiplicity, args.digits)]))
    run.finish(grid)
    print(f"modal energy {res.energy:.{args.digits}f} (multiplicity {res.multiplicity})")
    return EXIT_OK


def cmd_gap(args) -> int:
    _require(args, "lam", "n", "interval")
    _positive(args, "n")
    lam, grid = _params(args).lam, _grid(args)
    a, b = args.interval
    if not a < b:
        raise UsageError("--interval must satisfy a < b")
    run = _Run(args, "gap")
    spectra = grid_spectra(lam, _omega(args), args.n, grid, args.tol, window=(a, b),
                           threads=_threads(args), backend=args.backend)
    values = np.concatenate(spectra)
    g = max_gap(values, (a, b)) if values.size else b - a
    run.add(sio.write_csv(run.path(".csv"), ["interval_left", "interval_right", "max_gap", "eigenvalues"],
                          [(a, b, g, int(values.size))]))
    run.finish(grid)
    print(f"max gap {g:.6g} over {values.size} eigenvalues")
    return EXIT_OK


def _nearest_point(args, lam, omega, grid):
    """Grid point whose H_N has an eigenvalue nearest --energy within the search width."""
    E, w = args.energy, args.search_width
    counts = window_counts(lam, omega, args.n, grid, E - w, E + w, threads=_threads(args), backend=args.backend)
    xs, ys = grid.points()
    best = None
    for i in np.flatnonzero(counts.ravel()):
        p = TorusPoint(TorusCoordinate(int(xs[i])), TorusCoordinate(int(ys[i])))
        ev = eigenvalues_bisection(build_hamiltonian(p, lam, omega, args.n, args.backend), 1e-15,
                                   (E - w, E + w), args.backend)
        d = float(np.min(np.abs(ev - E)))
        if best is None or d < best[0]:
            best = (d, p)
    if best is None:
        raise UsageError(f"no eigenvalue within {w} of {E} on the grid; widen --search-width")
    return best[1]


def cmd_residual(args) -> int:
    _require(args, "lam", "energy", "n")
    _positive(args, "n", "iterations")
    if (args.point is None) == (args.grid is None):
        raise UsageError("residual: give exactly one of --point or --grid")
    params, omega = _params(args), _omega(args)
    run = _Run(args, "residual")
    grid = None
    if args.point is not None:
        p = _point(args.point)
    else:
        grid = _grid(args)
        p = _nearest_point(args, params.lam, omega, grid)
    H = build_hamiltonian(p, params.lam, omega, args.n, args.backend)
    r = _guard("residual", residual_distance(H, args.energy, args.iterations))
    x, y = p.as_floats()
    run.add(sio.write_csv(run.path(".csv"), ["x", "y", "energy", "residual"], [(x, y, args.energy, r)]))
    run.finish(grid)
    print(f"residual {r:.3e} at ({x:.17g}, {y:.17g})")
    return EXIT_OK


def cmd_badslice(args) -> int:
    _require(args, "lam", "n")
    _positive(args, "n")
    params, omega = _params(args), _omega(args)
    run = _Run(args, "badslice")
    ref = GridSpec(args.reference_grid, inclusive_endpoints=False)
    if args.point is not None:
        if args.energy is None:
            raise UsageError("badslice: --point needs --energy")
        p = _point(args.point)
        u = finite_exponent_u(params, p, args.n, backend=args.backend)
        L_ref = grid_integrate(params, args.n, ref, backend=args.backend).value
        E, u_min, u_anchor = params.energy, u, u
    else:
        if args.energy is not None:
            raise UsageError("badslice: --energy applies only with --point")
        if args.n > MAX_FULL_SPECTRUM:
            raise UsageError(f"badslice search needs n <= {MAX_FULL_SPECTRUM}")
        res = bad_slice_search(params.lam, omega, args.n, _point(args.anchor),
                               search_grid=GridSpec(args.search_grid), radius=args.radius,
                               reference_grid=ref, backend=args.backend)
        E, p, u_min, u_anchor, L_ref = res.energy, res.point, res.u_min, res.u_anchor, res.L_ref
    _guard("u_n", u_min)
    is_bad = abs(u_min - L_ref) > BAD_FRACTION * L_ref
    x, y = p.as_floats()
    run.add(sio.write_csv(
        run.path(".csv"),
        ["energy", "x", "y", "u_n", "u_anchor", "L_ref", "threshold", "is_bad"],
        [(E, x, y, u_min, u_anchor, L_ref, (1 - BAD_FRACTION) * L_ref, int(is_bad))],
    ))
    run.finish(ref)
    print(f"E={E:.10g} point=({x:.8f}, {y:.8f}) u={u_min:.6g} L_ref={L_ref:.6g} bad={is_bad}")
    return EXIT_OK


def cmd_eigenvalues(args) -> int:
    _require(args, "lam", "n", "point")
    _positive(args, "n")
    if args.window is None and args.n > MAX_FULL_SPECTRUM:
        raise UsageError(f"full spectra are limited to n <= {MAX_FULL_SPECTRUM}; pass --window")
    params, omega = _params(args), _omega(args)
    p = _point(args.point)
    run = _Run(args, "eigenvalues")
    ev = eigenvalues_bisection(build_hamiltonian(p, params.lam, omega, args.n, args.backend), args.tol,
                               args.window, args.backend)
    _guard("eigenvalues", ev)
    sidecar = {
        "x_fraction": p.x.frac, "y_fraction": p.y.frac,
        "lambda": sio.decimal17(params.lam), "omega_fraction": omega.frac.frac,
        "N": args.n, "tol": args.tol, "window": args.window,
    }
    path = sio.write_eigenvalue_dump(run.path(".csv"), ev, sidecar)
    run.add(path)
    run.finish()
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        rec = json.loads(Path(args.manifest).read_text())
        cfg = dict(rec["config"])
    except (OSError, KeyError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read manifest {args.manifest}: {e}") from None
    for key in ("anchor", "point", "window", "interval"):
        if isinstance(cfg.get(key), list):
            cfg[key] = tuple(cfg[key])
    ns = argparse.Namespace(**cfg)
    ns.out = args.out or str(Path(args.manifest).parent)
    ns.config = None
    ns.argv = rec.get("command_line", [])[1:]
    return dispatch(ns)


COMMANDS = {
    "lyapunov": cmd_lyapunov,
    "criterion": cmd_criterion,
    "slice": cmd_slice,
    "replay": cmd_replay,
}
SPECTRUM_ACTIONS = {
    "histogram": cmd_histogram,
    "modal": cmd_modal,
    "gap": cmd_gap,
    "residual": cmd_residual,
    "badslice": cmd_badslice,
    "eigenvalues": cmd_eigenvalues,
}


def cmd_spectrum(args) -> int:
    return SPECTRUM_ACTIONS[args.action](args)


COMMANDS["spectrum"] = cmd_spectrum


def dispatch(args) -> int:
    return COMMANDS[args.command](args)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(args)
    except UsageError as e:
        print(f"skewshift: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalGuardError as e:
        print(f"skewshift: numerical guard: {e}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as e:
        print(f"skewshift: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
