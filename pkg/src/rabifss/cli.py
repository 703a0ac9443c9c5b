"""Command-line pipelines emitting reproducible CSV/JSON data files.

Commands:

- ``fss``: ground-state energies over a g grid for a ladder of basis
  sizes (dense diagonalization or trained RBM states), scaling-exponent
  curves, pairwise intersections, and the extrapolated critical point.
- ``curves``: rescaled full-model observables (energy, photon number,
  curvature) over a g grid.
- ``error-report``: percentage deviation between the scaling curves of
  two completed runs on identical grids.
- ``bsa``: standalone sequence extrapolation of a user CSV of
  (N, value) pairs, mapping N to h = 1/N.

Configuration comes from an optional key=value text file plus flags;
flags win.  Re-running a command with the same resolved config and seed
reproduces byte-identical outputs.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import extrapolate, fss, qcircuit, rbm
from .eigensolver import ground_state
from .errors import ConfigError, GridMismatchError, InsufficientDataError, RabifssError
from .hamiltonians import build_h_np, build_h_sp, rescaled_curves

_ED_SIZES = tuple(range(8, 34, 2))
_RBM_SIZES = tuple(range(8, 18, 2))
_BUILDERS = {"np": build_h_np, "sp": build_h_sp}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings; echoed verbatim into critical_point.json."""

    engine: str = "ed"
    phase: str = "np"
    truncations: tuple = ()
    g_min: float = 0.5
    g_max: float = 1.5
    g_step: float = 1e-3
    omega0: float = 1.0
    Omega_over_omega0: float = 1e3
    dim_fock: int = 640
    lr: float = 0.01
    iters: int = 30000
    shots: int = 8192
    seed: int = 0
    workers: int = 1
    resume: str = ""
    output_dir: str = "."

    def __post_init__(self):
        if self.engine not in ("ed", "rbm-exact", "rbm-sampled"):
            raise ConfigError(f"unknown engine '{self.engine}'")
        if self.phase not in ("np", "sp", "rabi"):
            raise ConfigError(f"unknown phase '{self.phase}'")
        if self.truncations:
            sizes = tuple(int(n) for n in self.truncations)
            if any(n < 2 for n in sizes) or any(
                b <= a for a, b in zip(sizes, sizes[1:])
            ):
                raise ConfigError(
                    f"truncations must be strictly increasing and >= 2, got {sizes}"
                )
            object.__setattr__(self, "truncations", sizes)
        if not self.g_min < self.g_max:
            raise ConfigError(f"need g_min < g_max, got {self.g_min}, {self.g_max}")
        if self.g_step <= 0.0:
            raise ConfigError(f"g_step must be positive, got {self.g_step}")
        for name in ("lr", "Omega_over_omega0", "omega0"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        for name in ("iters", "shots", "dim_fock", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")


_CONFIG_KEYS = {f for f in RunConfig.__dataclass_fields__}


def parse_config_file(path) -> dict:
    """Plain key=value lines; '#' starts a comment; n_list maps to truncations."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line is not key=value: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key == "n_list":
            key = "truncations"
        if key == "out":
            key = "output_dir"
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        values[key] = value.strip()
    return values


def _coerce(key: str, value):
    if isinstance(value, str):
        field_type = RunConfig.__dataclass_fields__[key].type
        if key == "truncations":
            return tuple(int(part) for part in value.split(",") if part.strip())
        if field_type == "int":
            return int(value)
        if field_type == "float":
            return float(value)
    return value


def resolve_config(file_values: dict, flag_values: dict) -> RunConfig:
    """Defaults, then config file, then flags; later layers win."""
    merged = {}
    for layer in (file_values, flag_values):
        for key, value in layer.items():
            if value is not None:
                merged[key] = _coerce(key, value)
    if "truncations" not in merged:
        engine = merged.get("engine", "ed")
        merged["truncations"] = _ED_SIZES if engine == "ed" else _RBM_SIZES
    if "g_step" not in merged and merged.get("engine", "ed") != "ed":
        merged["g_step"] = 0.01  # trained sweeps default to a coarser grid
    if "workers" not in merged:
        merged["workers"] = os.cpu_count() or 1
    return RunConfig(**merged)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_text(path: Path, text: str, created: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    created.append(path)


def _ed_row_task(args):
    phase, n, g_values, omega0 = args
    build = _BUILDERS[phase]
    return tuple(ground_state(build(n, g, omega0)).energy for g in g_values)


def _rbm_row_task(args):
    """Warm-started training sweep for one basis size; returns energies
    on the ascending grid plus the final parameter vector."""
    (phase, n, g_values, omega0, lr, iters, seed, engine, shots, resume) = args
    encoding = rbm.make_encoding(n)
    # each chain ends on the phase's truncation-converged grid edge (np: low
    # g, sp: high g), where warm-started errors cancel between neighbouring
    # sizes in the scaling ratio; starting couplings with a quadratic
    # coefficient near 1 can trap padded truncations in excited states
    order = range(len(g_values) - 1, -1, -1) if phase == "np" else range(len(g_values))
    source = "exact" if engine == "rbm-exact" else qcircuit.make_sampled_source(shots)
    build = _BUILDERS[phase]
    params = None
    if resume:
        warm, _, _ = rbm.load_checkpoint(resume)
        if warm.n == encoding.n:
            params = warm
    energies = [0.0] * len(g_values)
    for idx in order:
        h_emb = rbm.embed_operator(build(n, g_values[idx], omega0), encoding)
        params, trace = rbm.train(
            h_emb, encoding, init=params, lr=lr, iters=iters,
            p_source=source, seed=seed,
        )
        energies[idx] = float(trace[-1])
    return tuple(energies), params.to_vector(), params.n, params.m


def _parallel_map(task, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, items))
    return [task(item) for item in items]


def _intersection_chain(curves, config, refine: bool):
    points = []
    build = _BUILDERS[config.phase]
    for prev, cur in zip(curves, curves[1:]):
        point = fss.find_intersection(prev, cur)
        if refine:
            sizes = (prev.n, prev.n_prime, cur.n_prime)

            def diff(g, sizes=sizes):
                e = [ground_state(build(n, g, config.omega0)).energy for n in sizes]
                left = math.log(e[0] / e[1]) / math.log(sizes[1] / sizes[0])
                right = math.log(e[1] / e[2]) / math.log(sizes[2] / sizes[1])
                return left - right

            point = fss.refine_intersection(point, diff, step=config.g_step)
        points.append(point)
    return points


def cmd_fss(config: RunConfig) -> int:
    if config.phase not in ("np", "sp"):
        raise ConfigError("fss requires phase np or sp")
    if len(config.truncations) < 4:
        raise InsufficientDataError(
            "need at least four truncations for two intersecting curve pairs"
        )
    out = Path(config.output_dir)
    created = []
    try:
        g_grid = fss.default_g_grid(config.g_min, config.g_max, config.g_step)
        g_values = tuple(float(g) for g in g_grid)
        sizes = config.truncations
        if config.engine == "ed":
            rows = _parallel_map(
                _ed_row_task,
                [(config.phase, n, g_values, config.omega0) for n in sizes],
                config.workers,
            )
        else:
            tasks = [
                (config.phase, n, g_values, config.omega0, config.lr, config.iters,
                 config.seed + i, config.engine, config.shots, config.resume)
                for i, n in enumerate(sizes)
            ]
            results = _parallel_map(_rbm_row_task, tasks, config.workers)
            rows = [r[0] for r in results]
            for n, (_, vector, n_vis, m) in zip(sizes, results):
                params = rbm.RbmParams.from_vector(vector, n_vis, m)
                path = out / f"checkpoint_N{n}.npz"
                path.parent.mkdir(parents=True, exist_ok=True)
                rbm.save_checkpoint(path, params, seed=config.seed, iteration=config.iters)
                created.append(path)
        curves = [
            fss.delta_curve(rows[i], rows[i + 1], sizes[i], sizes[i + 1], g_grid)
            for i in range(len(sizes) - 1)
        ]
        points = _intersection_chain(curves, config, refine=config.engine == "ed")
        bsa = extrapolate.bsa_limit(
            [p.g_star for p in points], [1.0 / p.n_label for p in points]
        )

        lines = ["phase,N,N_prime,g,delta"]
        for curve in curves:
            for g, value in zip(curve.g_grid, curve.values):
                lines.append(
                    f"{config.phase},{curve.n},{curve.n_prime},{_fmt(g)},{_fmt(value)}"
                )
        _write_text(out / "delta_curves.csv", "\n".join(lines) + "\n", created)

        lines = ["N,g_star,bracket_width"]
        for p in points:
            lines.append(f"{p.n_label},{_fmt(p.g_star)},{_fmt(p.bracket_width)}")
        _write_text(out / "intersections.csv", "\n".join(lines) + "\n", created)

        payload = {
            "g_c": bsa.limit,
            "omega_star": bsa.omega_star,
            "epsilon": bsa.epsilon,
            "engine": config.engine,
            "config": asdict(config),
        }
        _write_text(
            out / "critical_point.json",
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
            created,
        )
    except Exception:
        for path in created:
            path.unlink(missing_ok=True)
        raise
    return 0


def cmd_curves(config: RunConfig) -> int:
    if config.phase != "rabi":
        raise ConfigError("curves requires phase rabi")
    out = Path(config.output_dir)
    created = []
    g_grid = fss.default_g_grid(config.g_min, config.g_max, config.g_step)
    e_g, n_g, d2e = rescaled_curves(
        g_grid, config.dim_fock, config.Omega_over_omega0, config.omega0,
        workers=config.workers,
    )
    lines = ["g,e_g,n_g,d2e_dg2"]
    for g, e, n, d2 in zip(g_grid, e_g, n_g, d2e):
        lines.append(f"{_fmt(g)},{_fmt(e)},{_fmt(n)},{_fmt(d2)}")
    _write_text(out / "observables.csv", "\n".join(lines) + "\n", created)
    return 0


def _read_delta_curves(path: Path) -> dict:
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "phase,N,N_prime,g,delta":
        raise ConfigError(f"{path} is not a delta_curves.csv file")
    curves = {}
    for line in lines[1:]:
        phase, n, n_prime, g, delta = line.split(",")
        key = (phase, int(n), int(n_prime))
        curves.setdefault(key, []).append((float(g), float(delta)))
    return curves


def cmd_error_report(run_dir, reference_dir, config: RunConfig) -> int:
    run = _read_delta_curves(Path(run_dir) / "delta_curves.csv")
    ref = _read_delta_curves(Path(reference_dir) / "delta_curves.csv")
    if set(run) != set(ref):
        raise GridMismatchError(
            f"curve sets differ: {sorted(set(run) ^ set(ref))}"
        )
    keys = sorted(run)
    grid = [g for g, _ in ref[keys[0]]]
    for key in keys:
        if [g for g, _ in run[key]] != grid or [g for g, _ in ref[key]] != grid:
            raise GridMismatchError(f"g grids differ on curve {key}")
    out = Path(config.output_dir)
    created = []
    lines = ["g,mean_pct_error"]
    for i, g in enumerate(grid):
        errs = [
            abs(ref[key][i][1] - run[key][i][1]) / abs(ref[key][i][1]) * 100.0
            for key in keys
        ]
        lines.append(f"{_fmt(g)},{_fmt(sum(errs) / len(errs))}")
    _write_text(out / "error.csv", "\n".join(lines) + "\n", created)
    return 0


def cmd_bsa(input_csv, config: RunConfig) -> int:
    rows = []
    for raw in Path(input_csv).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ConfigError(f"expected 'N,value' rows, got {raw!r}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            if rows:
                raise ConfigError(f"malformed row {raw!r}")
            continue  # header line
    if len(rows) < 3:
        raise InsufficientDataError(f"need at least 3 rows, got {len(rows)}")
    sizes = [n for n, _ in rows]
    values = [v for _, v in rows]
    result = extrapolate.bsa_limit(values, [1.0 / n for n in sizes])
    out = Path(config.output_dir)
    created = []
    payload = {
        "limit": result.limit,
        "omega_star": result.omega_star,
        "epsilon": result.epsilon,
        "input": str(input_csv),
        "config": asdict(config),
    }
    _write_text(
        out / "extrapolation.json",
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
        created,
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabifss",
        description="Finite-size scaling pipelines for the quantum Rabi model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_engine=True):
        p.add_argument("config", nargs="?", help="key=value config file")
        if with_engine:
            p.add_argument("--engine", choices=("ed", "rbm-exact", "rbm-sampled"))
        p.add_argument("--phase", choices=("np", "sp", "rabi"))
        p.add_argument("--n-list", dest="truncations",
                       help="comma-separated truncation sizes")
        p.add_argument("--g-min", dest="g_min", type=float)
        p.add_argument("--g-max", dest="g_max", type=float)
        p.add_argument("--g-step", dest="g_step", type=float)
        p.add_argument("--lr", type=float)
        p.add_argument("--iters", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--resume", help="checkpoint file warm-starting the sweep")
        p.add_argument("--out", dest="output_dir")

    add_common(sub.add_parser("fss", help="critical point by finite-size scaling"))
    add_common(sub.add_parser("curves", help="rescaled full-model observables"),
               with_engine=False)

    p_err = sub.add_parser("error-report", help="percentage deviation between runs")
    p_err.add_argument("run_dir", help="directory of the run under test")
    p_err.add_argument("reference_dir", help="directory of the reference run")
    p_err.add_argument("--out", dest="output_dir")

    p_bsa = sub.add_parser("bsa", help="extrapolate a CSV of (N, value) pairs")
    p_bsa.add_argument("input_csv")
    p_bsa.add_argument("--out", dest="output_dir")
    return parser


def main(argv=None) -> int:
    args = vars(_build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    run_dir = args.pop("run_dir", None)
    reference_dir = args.pop("reference_dir", None)
    input_csv = args.pop("input_csv", None)
    try:
        file_values = parse_config_file(config_path) if config_path else {}
        if command == "curves" and "phase" not in file_values and args.get("phase") is None:
            args["phase"] = "rabi"
        config = resolve_config(file_values, args)
        if command == "fss":
            return cmd_fss(config)
        if command == "curves":
            return cmd_curves(config)
        if command == "error-report":
            return cmd_error_report(run_dir, reference_dir, config)
        return cmd_bsa(input_csv, config)
    except RabifssError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2 if isinstance(err, ConfigError) else 3
    except OSError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
