"""``eqm-lab`` batch runner.

Usage::

    eqm-lab <spin|singlet|phasespace|quasiprob|twoslit> --config FILE
            [--out DIR] [--seed N] [--threads N]

A config file (TOML or JSON, chosen by extension) has the top-level keys
``command``, ``out``, ``seed``, ``threads``, ``tolerances`` and ``params``;
anything else is rejected. Outputs are CSV/JSON files plus ``manifest.json``
in the output directory.

Exit codes: 0 success, 2 config error, 3 numeric contract violation,
4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__, _kernels
from . import entanglement as ent
from . import phase_space as ps
from . import quasiprob as qp
from . import spin_lattice as sl
from . import twoslit as ts
from .serialize import (
    csv_text,
    dumps,
    feasibility_to_json,
    frame_to_json,
    marginal_to_json,
    quasiprob_to_json,
    system_from_json,
    write_atomic,
)

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT, EXIT_IO = 0, 2, 3, 4

Vec3 = tuple[float, float, float]


class ConfigError(Exception):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# -- parameter blocks ---------------------------------------------------------

class SpinSweep(_Strict):
    theta_deg: list[float]
    extra_directions: list[Vec3] = []


class SpinParams(_Strict):
    directions: list[Vec3] = []
    state: Literal["eigenstate", "isotropic"] = "isotropic"
    axis: int = 0
    sign: Literal[1, -1] = 1
    projections: list[list[int]] = []
    consistency_pairs: list[tuple[int, int]] = []
    interference_triples: list[tuple[int, int, int]] = []
    sweep: Optional[SpinSweep] = None


class SingletParams(_Strict):
    directions: list[Vec3]
    chsh: list[tuple[int, int, int, int]] = []
    agreement_trials: Optional[int] = None


class PhaseSpaceParams(_Strict):
    n: int = 256
    half_width: float = 10.0
    hbar: float = 1.0
    alphas: list[float] = [0.0, 0.25, 0.5, 0.75, 1.0]
    roundtrip_states: int = 5
    write_state: bool = False


class PairwiseSystem(_Strict):
    pairwise_c: float
    n: int = 3


class ExplicitSystem(_Strict):
    arities: list[int]
    marginals: list[dict[str, Any]]


BasisSpec = Union[Literal["x", "y", "z", "fourier"], list[list[tuple[float, float]]]]


class QuasiprobParams(_Strict):
    state: list[tuple[float, float]] = []
    bases: list[BasisSpec] = []
    lp: list[Union[PairwiseSystem, ExplicitSystem]] = []


class ModelParams(_Strict):
    kind: Literal["none", "fixed", "uniform", "vonmises"] = "uniform"
    mu: float = 0.0
    kappa: float = 0.0


class TwoSlitParams(_Strict):
    x_left: float = -5.0
    x_right: float = 5.0
    width: float = 2.0
    width_right: Optional[float] = None
    d1: float = 1000.0
    d2: float = 1000.0
    wavelength: float = 1.0
    source_x: float = 0.0
    screen_min: float = -150.0
    screen_max: float = 150.0
    screen_points: int = Field(601, ge=3)
    model: ModelParams = ModelParams()
    runs: int = Field(100_000, ge=1)


PARAMS = {
    "spin": SpinParams,
    "singlet": SingletParams,
    "phasespace": PhaseSpaceParams,
    "quasiprob": QuasiprobParams,
    "twoslit": TwoSlitParams,
}

DEFAULT_TOLERANCES = {
    "spin": {"probability": 1e-12},
    "singlet": {"correlation": 1e-12, "agreement": 1e-12},
    "phasespace": {"commutator": 1e-6, "roundtrip": 1e-10},
    "quasiprob": {"marginal": 1e-10},
    "twoslit": {"normalization": 1e-10},
}


class ExperimentConfig(_Strict):
    command: Optional[str] = None
    out: Optional[str] = None
    seed: int = Field(0, ge=0, lt=2**64)
    threads: int = Field(1, ge=1)
    tolerances: dict[str, float] = {}
    params: dict[str, Any] = {}


def load_config(path: Path, command: str) -> tuple[ExperimentConfig, BaseModel, dict]:
    try:
        raw_text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            raw = tomllib.loads(raw_text.decode("utf-8"))
        elif path.suffix.lower() == ".json":
            raw = json.loads(raw_text)
        else:
            raise ConfigError(f"config must be .toml or .json, got {path.suffix!r}")
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    try:
        cfg = ExperimentConfig.model_validate(raw)
        if cfg.command is not None and cfg.command != command:
            raise ConfigError(f"config is for {cfg.command!r}, not {command!r}")
        unknown = set(cfg.tolerances) - set(DEFAULT_TOLERANCES[command])
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        params = PARAMS[command].model_validate(cfg.params)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    tolerances = {**DEFAULT_TOLERANCES[command], **cfg.tolerances}
    return cfg, params, tolerances


# -- runs -----------------------------------------------------------------------
#
# Each runner has a prepare step (may raise ConfigError, writes nothing) and
# returns a callable that computes. The callable returns
# (files: dict[name, text], summary: dict, failures: list[str]).

Outputs = tuple[dict[str, str], dict, list]


def _frame(vectors) -> sl.DirectionFrame:
    try:
        return sl.DirectionFrame(vectors)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"invalid frame: {exc}") from exc


def _check_indices(frame: sl.DirectionFrame, indices, what: str):
    for j in indices:
        if not 0 <= j < len(frame):
            raise ConfigError(f"{what}: direction index {j} out of range for {len(frame)} directions")


def prepare_spin(p: SpinParams, tol: dict, seed: int, threads: int) -> Callable[[], Outputs]:
    sweep_frames = []
    if p.sweep is not None:
        for theta in p.sweep.theta_deg:
            t = math.radians(theta)
            vecs = [(0.0, 0.0, 1.0), (math.sin(t), 0.0, math.cos(t))] + list(p.sweep.extra_directions)
            sweep_frames.append((theta, _frame(vecs)))
    frame = _frame(p.directions) if p.directions else None
    if frame is None and p.sweep is None:
        raise ConfigError("spin config needs directions or a sweep")
    if frame is not None:
        _check_indices(frame, [p.axis], "axis")
        for proj in p.projections:
            if not proj or len(set(proj)) != len(proj):
                raise ConfigError(f"invalid projection subset {proj}")
            _check_indices(frame, proj, "projection")
        for pair in p.consistency_pairs:
            _check_indices(frame, pair, "consistency pair")
            if pair[0] == pair[1]:
                raise ConfigError(f"consistency pair {pair} repeats a direction")
        for tri in p.interference_triples:
            _check_indices(frame, tri, "interference triple")
            if len(set(tri)) != 3:
                raise ConfigError(f"interference triple {tri} repeats a direction")
    elif p.projections or p.consistency_pairs or p.interference_triples:
        raise ConfigError("projections need an explicit directions list")

    def run() -> Outputs:
        files, summary, failures = {}, {}, []
        eps = tol["probability"]
        if frame is not None:
            state = (sl.build_eigenstate(frame, p.axis, p.sign) if p.state == "eigenstate"
                     else sl.build_isotropic(frame))
            subsets = p.projections or [[j] for j in range(len(frame))]
            tables, rows = [], []
            for sub in subsets:
                table = sl.project_marginal(state, sub)
                probs = sl.born_probabilities(table)
                tables.append(marginal_to_json(table, probs))
                for cfg, val in probs.as_dict().items():
                    rows.append((" ".join(map(str, sub)), " ".join(map(str, cfg)), val))
                if abs(probs.probabilities.sum() - 1.0) > eps:
                    failures.append(f"probabilities on {sub} do not sum to 1")
            files["marginals.json"] = dumps({"state": p.state, "frame": frame_to_json(frame),
                                             "tables": tables})
            files["probabilities.csv"] = csv_text(["subset", "config", "probability"], rows)
            singles = [sl.marginal_probabilities(state, [j]).probabilities for j in range(len(frame))]
            if p.state == "isotropic":
                dev = max(float(np.abs(s - 0.5).max()) for s in singles)
                summary["max_single_direction_deviation_from_half"] = dev
                if dev > eps:
                    failures.append(f"isotropic single-direction probabilities deviate by {dev:.3g}")
            else:
                own = singles[p.axis][0 if p.sign > 0 else 1]
                summary["eigen_axis_probability"] = float(own)
                if abs(own - 1.0) > eps:
                    failures.append(f"eigenstate axis probability {own!r} != 1")
            res_rows = []
            for i, j in p.consistency_pairs:
                r = sl.marginal_consistency_residual(state, i, j)
                res_rows.append(("consistency", f"{i} {j}", "", r))
                if p.state == "isotropic" and r > eps:
                    failures.append(f"isotropic consistency residual {r:.3g} on ({i}, {j})")
            for i, j, k in p.interference_triples:
                r = sl.interference_residual_3(state, i, j, k)
                for a, si in enumerate((1, -1)):
                    for b, sj in enumerate((1, -1)):
                        res_rows.append(("interference", f"{i} {j} {k}", f"{si} {sj}", r[a, b]))
            if res_rows:
                files["residuals.csv"] = csv_text(["kind", "indices", "config", "value"], res_rows)
        if sweep_frames:
            rows, worst = [], 0.0
            for theta, fr in sweep_frames:
                probs = sl.marginal_probabilities(sl.build_eigenstate(fr, 0, 1), [1])
                c = fr[0].dot(fr[1])
                for s in (1, -1):
                    expected = (1 + s * c) / 2
                    got = probs[(s,)]
                    worst = max(worst, abs(got - expected))
                    rows.append((theta, s, got, expected))
            files["sweep.csv"] = csv_text(["theta_deg", "s2", "probability", "expected"], rows)
            summary["sweep_max_deviation"] = worst
            if worst > eps:
                failures.append(f"sweep deviates from (1 + s cos theta)/2 by {worst:.3g}")
        return files, summary, failures

    return run


def prepare_singlet(p: SingletParams, tol: dict, seed: int, threads: int) -> Callable[[], Outputs]:
    frame = _frame(p.directions)
    for quad in p.chsh:
        _check_indices(frame, quad, "chsh")
    if p.agreement_trials is not None and p.agreement_trials < 1:
        raise ConfigError("agreement_trials must be positive")

    def run() -> Outputs:
        files, summary, failures = {}, {}, []
        models = {"entangled": ent.build_singlet_entangled(frame),
                  "factorized": ent.build_singlet_factorized(frame)}
        n = len(frame)
        rows, worst = [], 0.0
        tables = {}
        for name, model in models.items():
            table = ent.correlation_table(model)
            tables[name] = table.tolist()
            for i in range(n):
                for j in range(n):
                    expected = -frame[i].dot(frame[j])
                    worst = max(worst, abs(table[i, j] - expected))
                    rows.append((name, i, j, table[i, j], expected))
        files["correlations.csv"] = csv_text(["model", "i", "j", "E", "expected"], rows)
        files["correlations.json"] = dumps(tables)
        summary["max_correlation_deviation"] = worst
        if worst > tol["correlation"]:
            failures.append(f"E(i,j) deviates from -n_i.n_j by {worst:.3g}")
        if p.chsh:
            chsh_rows, values = [], []
            for a, a2, b, b2 in p.chsh:
                for name, model in models.items():
                    s = ent.chsh_value(model, a, a2, b, b2)
                    chsh_rows.append((name, a, a2, b, b2, s))
                    values.append(abs(s))
            files["chsh.csv"] = csv_text(["model", "a", "a2", "b", "b2", "S"], chsh_rows)
            summary["max_abs_chsh"] = max(values)
        rng = np.random.default_rng(seed)
        agree = ent.models_agree(frame, p.agreement_trials, rng)
        summary["model_agreement_max_deviation"] = agree
        if agree > tol["agreement"]:
            failures.append(f"singlet models disagree by {agree:.3g}")
        return files, summary, failures

    return run


def prepare_phasespace(p: PhaseSpaceParams, tol: dict, seed: int, threads: int) -> Callable[[], Outputs]:
    try:
        grid = ps.PhaseGrid.symmetric(p.n, p.half_width, p.hbar)
        splits = [ps.AlphaSplit.from_alpha(a) for a in p.alphas]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if p.roundtrip_states < 0:
        raise ConfigError("roundtrip_states must be non-negative")

    def run() -> Outputs:
        files, summary, failures = {}, {}, []
        lam = ps.gaussian_test_state(grid)
        rows = [(s.alpha, s.beta, ps.commutator_residual(lam, s)) for s in splits]
        files["commutator.csv"] = csv_text(["alpha", "beta", "residual"], rows)
        worst = max((r[2] for r in rows), default=0.0)
        summary["max_commutator_residual"] = worst
        if worst > tol["commutator"]:
            failures.append(f"commutator residual {worst:.3g} exceeds {tol['commutator']}")
        rng = np.random.default_rng(seed)
        rt_rows, rt_worst = [], 0.0
        for idx in range(p.roundtrip_states):
            psi = random_band_limited(grid.q, rng)
            chi = ps.normalize(np.exp(-grid.p**2 / 2), grid.dp)
            for s in splits:
                lifted = ps.lift(grid, psi, chi, s)
                dev_q = float(np.abs(ps.project_to_position(lifted, chi, s) - psi).max())
                omega = ps.normalize(psi, grid.dq)
                lifted_p = ps.lift(grid, omega, chi, s)
                dev_p = float(np.abs(ps.project_to_momentum(lifted_p, omega, s) - chi).max())
                rt_rows.append((idx, s.alpha, dev_q, dev_p))
                rt_worst = max(rt_worst, dev_q, dev_p)
        if rt_rows:
            files["roundtrip.csv"] = csv_text(["state", "alpha", "position_dev", "momentum_dev"], rt_rows)
            summary["max_roundtrip_deviation"] = rt_worst
            if rt_worst > tol["roundtrip"]:
                failures.append(f"round trip deviation {rt_worst:.3g} exceeds {tol['roundtrip']}")
        if p.write_state:
            files["gaussian_state.bin"] = ps.to_bytes(lam)
        return files, summary, failures

    return run


def random_band_limited(q: np.ndarray, rng: np.random.Generator, modes: int = 6) -> np.ndarray:
    """Gaussian-windowed sum of a few low-frequency plane waves."""
    span = q[-1] - q[0]
    ks = rng.integers(-modes, modes + 1, size=modes) * 2 * np.pi / span
    coef = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    env = np.exp(-(q - q.mean()) ** 2 / (2 * (span / 12) ** 2))
    return env * (np.exp(1j * np.outer(q, ks)) @ coef)


def _basis(entry, dim: int) -> qp.MeasBasis:
    if isinstance(entry, str):
        if entry == "fourier":
            return qp.MeasBasis.fourier(dim)
        return qp.MeasBasis.pauli(entry)
    arr = np.array(entry, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ConfigError("explicit basis must be a matrix of [re, im] pairs")
    return qp.MeasBasis(arr[..., 0] + 1j * arr[..., 1])


def prepare_quasiprob(p: QuasiprobParams, tol: dict, seed: int, threads: int) -> Callable[[], Outputs]:
    state, bases = None, []
    if p.state or p.bases:
        if not p.state or len(p.bases) < 2:
            raise ConfigError("quasiprob needs a state and at least two bases")
        try:
            vec = np.array([complex(re, im) for re, im in p.state])
            state = qp.FiniteState.normalized(vec)
            bases = [_basis(b, state.dim) for b in p.bases]
            for b in bases:
                if b.dim != state.dim:
                    raise ConfigError(f"basis dimension {b.dim} != state dimension {state.dim}")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    systems = []
    for item in p.lp:
        try:
            if isinstance(item, PairwiseSystem):
                systems.append(("pairwise", item.pairwise_c, qp.pairwise_spin_system(item.pairwise_c, item.n)))
            else:
                systems.append(("explicit", None, system_from_json(item.model_dump())))
        except (ValueError, IndexError, KeyError) as exc:
            raise ConfigError(f"invalid marginal system: {exc}") from exc
    if state is None and not systems:
        raise ConfigError("nothing to compute: give a state/bases or lp systems")

    def run() -> Outputs:
        files, summary, failures = {}, {}, []
        if state is not None:
            table = qp.symmetrized_quasiprob(state, bases)
            rows = [tuple(idx) + (float(table.values[idx]),) for idx in np.ndindex(*table.shape)]
            header = [f"outcome_{k}" for k in range(len(bases))] + ["value"]
            files["quasiprob.csv"] = csv_text(header, rows)
            files["quasiprob.json"] = dumps(quasiprob_to_json(table))
            value, where = qp.min_entry(table)
            residual = qp.verify_marginals(table, qp.born_marginal_system(state, bases))
            summary.update(min_entry=value, min_entry_index=list(where),
                           marginal_residual=residual, imag_residue=table.imag_residue,
                           table_sum=float(table.values.sum()))
            if residual > tol["marginal"]:
                failures.append(f"marginal residual {residual:.3g} exceeds {tol['marginal']}")
        if systems:
            results = []
            for kind, c, system in systems:
                res = qp.feasible_nonnegative_joint(system)
                entry = {"kind": kind, **feasibility_to_json(res, system)}
                if c is not None:
                    entry["pairwise_c"] = c
                if not res.feasible and not entry["certificate_valid"]:
                    failures.append("LP reported infeasible without a valid certificate")
                results.append(entry)
            files["lp.json"] = dumps(results)
            summary["lp_feasible"] = [r["feasible"] for r in results]
        return files, summary, failures

    return run


def prepare_twoslit(p: TwoSlitParams, tol: dict, seed: int, threads: int) -> Callable[[], Outputs]:
    try:
        if p.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if p.screen_max <= p.screen_min:
            raise ValueError("screen_max must exceed screen_min")
        geom = ts.SlitGeometry(p.x_left, p.x_right, p.width, p.d1, p.d2,
                               2 * math.pi / p.wavelength,
                               np.linspace(p.screen_min, p.screen_max, p.screen_points),
                               p.source_x, p.width_right)
        model = ts.DecoherenceModel(p.model.kind, p.model.mu, p.model.kappa, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    def run() -> Outputs:
        files, summary, failures = {}, {}, []
        amp = ts.path_amplitude(geom)
        coherent = ts.coherent_intensity(amp)
        expected = ts.expected_distribution(amp, model)
        result = ts.ensemble_histogram(amp, model, p.runs, seed, threads)
        q = geom.screen
        files["intensity.csv"] = csv_text(["q", "value"], zip(q, coherent))
        files["expected.csv"] = csv_text(["q", "value"], zip(q, expected))
        files["histogram.csv"] = csv_text(["q", "value"], zip(q, result.counts))
        window = ts.smoothing_window(geom)
        p_left, p_right = ts.slit_probabilities(amp)
        meta = {
            "seed": seed,
            "runs": p.runs,
            "model": p.model.model_dump(),
            "visibility": result.visibility,
            "coherent_visibility": ts.visibility(coherent),
            "coherent_visibility_smoothed": ts.visibility(coherent, window),
            "expected_visibility_smoothed": ts.visibility(expected, window),
            "smoothing_window_samples": window,
            "aperture_points": amp.aperture_points,
            "p_left": p_left,
            "p_right": p_right,
        }
        files["run.json"] = dumps(meta)
        summary.update(meta)
        for name, dist in (("coherent", coherent), ("expected", expected)):
            if abs(dist.sum() - 1.0) > tol["normalization"]:
                failures.append(f"{name} distribution does not sum to 1")
        if int(result.counts.sum()) != p.runs:
            failures.append("histogram lost samples")
        return files, summary, failures

    return run


PREPARE = {
    "spin": prepare_spin,
    "singlet": prepare_singlet,
    "phasespace": prepare_phasespace,
    "quasiprob": prepare_quasiprob,
    "twoslit": prepare_twoslit,
}


def _to_builtin(obj):
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def run_command(command: str, config_path: Path, out: Optional[Path] = None,
                seed: Optional[int] = None, threads: Optional[int] = None,
                stderr=sys.stderr) -> int:
    try:
        cfg, params, tolerances = load_config(Path(config_path), command)
        seed = cfg.seed if seed is None else seed
        threads = cfg.threads if threads is None else threads
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if threads < 1:
            raise ConfigError("threads must be at least 1")
        out_dir = out if out is not None else (Path(cfg.out) if cfg.out else None)
        if out_dir is None:
            raise ConfigError("no output directory: pass --out or set 'out' in the config")
        compute = PREPARE[command](params, tolerances, seed, threads)
    except ConfigError as exc:
        print(f"eqm-lab {command}: config error: {exc}", file=stderr)
        return EXIT_CONFIG

    started = time.time()
    failures: list[str] = []
    files: dict[str, Any] = {}
    summary: dict = {}
    status = "ok"
    try:
        files, summary, failures = compute()
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        failures = [f"{type(exc).__name__}: {exc}"]
    if failures:
        status = "contract_violation"

    manifest = {
        "command": command,
        "config": {"seed": seed, "threads": threads, "tolerances": tolerances,
                   "params": params.model_dump(mode="json")},
        "artifact_version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "outputs": sorted(files) + ["manifest.json"],
        "summary": _to_builtin(summary),
        "status": status,
        "failures": failures,
        "wall_clock": {"started_unix": started, "elapsed_s": time.time() - started},
    }
    try:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, content in files.items():
            if isinstance(content, bytes):
                (out_dir / name).write_bytes(content)
            else:
                write_atomic(out_dir / name, content)
        write_atomic(out_dir / "manifest.json", dumps(manifest))
    except OSError as exc:
        print(f"eqm-lab {command}: I/O error: {exc}", file=stderr)
        return EXIT_IO
    if failures:
        for f in failures:
            print(f"eqm-lab {command}: contract violation: {f}", file=stderr)
        return EXIT_CONTRACT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqm-lab", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(PARAMS))
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_command(args.command, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
