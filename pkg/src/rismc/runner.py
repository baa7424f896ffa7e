"""Experiment execution: seeded sweeps, baseline evaluation and file outputs.

One *cell* is a (sweep value, baseline) pair; each cell runs ``trials``
independent repetitions. Per trial the proposed scheme trains its surface
offline on the training stream, then every scheme is scored by fresh inner
solves on held-out evaluation channels. Training, validation, evaluation
and benchmark construction all draw from disjoint seed streams derived
from (seed, trial), so evaluation channels are shared across baselines and
across power points, making the comparisons paired.

Baseline surfaces:

* ``conventional``: identity patterns and no coupling, so the surface is
  exactly the bare diagonal phase loads in both modes.
* ``fixed_mc`` (reflective only): one seeded, non-optimized coupled
  surface per element count; coupling magnitudes 0.3 with random phases,
  orbit-averaged and projected onto the power-conservation circle, held
  constant across the sweep.
* ``proposed``: the offline solver for the requested mode.

Outputs: ``results.csv`` (one row per cell), ``manifest.txt`` (a reloadable
config that reproduces the run byte-for-byte, plus derived per-trial seeds
as comments), per-cell scattering states under ``states/`` and per-trial
optimizer traces under ``traces/``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ScenarioConfig, gen_geometric, gen_parametric, substream
from .config import ExperimentSpec, dbm_to_watts, db_to_linear, spec_to_pairs, _format_number
from .errors import GenerationError, SingularMatrixError, SolverError
from .inner import InnerConfig, optimize_inner
from .linalg import two_dft
from .outer import OuterConfig, OuterTrace, run_algorithm1, run_algorithm2
from .scattering import (
    ReflectiveScattering,
    TransmissiveScattering,
    identity_transmissive,
    project_lossless,
    symmetrize,
)

log = logging.getLogger(__name__)

CSV_HEADER = (
    "sweep_name,sweep_value,baseline,mode,channel_model,trials,"
    "mean_sum_rate,std_sum_rate,mean_mse,iters"
)

# Runner-level stream tags (the outer solver uses 0..2 internally).
_S_EVAL_CHANNEL = 10
_S_EVAL_INNER = 11
_S_FIXED_MC = 12
_FIXED_MC_MAG = 0.3


@dataclass
class CellResult:
    sweep_value: float
    baseline: str
    per_trial_rates: list
    per_trial_mses: list
    states: list
    traces: list
    failures: list
    iters: int

    def mean_rate(self) -> float:
        vals = [r for r in self.per_trial_rates if np.isfinite(r)]
        return float(np.mean(vals)) if vals else float("nan")

    def std_rate(self) -> float:
        vals = [r for r in self.per_trial_rates if np.isfinite(r)]
        return float(np.std(vals)) if vals else float("nan")

    def mean_mse(self) -> float:
        vals = [m for m in self.per_trial_mses if np.isfinite(m)]
        return float(np.mean(vals)) if vals else float("nan")


@dataclass
class ResultTable:
    spec: ExperimentSpec
    cells: list


def cell_seed(base_seed: int, trial: int) -> int:
    """Derived 64-bit seed for one trial, stable across platforms."""
    ss = np.random.SeedSequence([int(base_seed), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_function(spec: ExperimentSpec):
    return gen_geometric if spec.channel_model == "geometric" else gen_parametric


def build_scenario(spec: ExperimentSpec, sweep_value: float) -> ScenarioConfig:
    """Scenario for one sweep cell; the swept quantity overrides the spec."""
    m, k = spec.M, spec.K
    p_dbm = spec.P_dbm
    if spec.sweep == "power":
        p_dbm = sweep_value
    elif spec.sweep == "elements":
        m = int(sweep_value)
    elif spec.sweep == "users":
        k = int(sweep_value)
    return ScenarioConfig(
        N=spec.N,
        M=m,
        K=k,
        P=dbm_to_watts(p_dbm),
        noise_var=dbm_to_watts(spec.noise_dbm),
        Q_br=spec.Q_br,
        Q_ru=spec.Q_ru,
        d_ris=spec.d_ris,
        d_user_range=(spec.d_user_min, spec.d_user_max),
        C0=db_to_linear(spec.C0_db),
        d0=spec.d0,
        eta=spec.eta,
        eta_direct=spec.eta_direct,
        num_bs=spec.num_bs,
        seed=spec.seed,
        geo_elevation=spec.geo_elevation,
    )


def fixed_mc_state(m: int, base_seed: int) -> ReflectiveScattering:
    """Seeded non-optimized coupled benchmark surface, one per element count."""
    rng = substream(base_seed, _S_FIXED_MC, m)
    sigma_aa = symmetrize(_FIXED_MC_MAG * np.exp(2j * np.pi * rng.random(m)))
    sigma_aa, sigma_ab = project_lossless(sigma_aa, np.ones(m, dtype=complex))
    return ReflectiveScattering(sigma_aa, sigma_ab, two_dft(m))


def _inner_config(spec: ExperimentSpec) -> InnerConfig:
    return InnerConfig(
        max_iters=spec.inner_iters,
        tol=spec.inner_tol,
        phase_step=spec.phase_step,
        backtrack=spec.backtrack,
    )


def _outer_config(spec: ExperimentSpec, trial_seed: int) -> OuterConfig:
    return OuterConfig(
        Q=spec.train_samples,
        I_max=spec.outer_iters,
        mu=spec.mu,
        seed=trial_seed,
        redraw=spec.redraw_per_iter,
        halve_on_increase=spec.halve_on_increase,
        keep_best=spec.keep_best,
        val_samples=spec.val_samples,
    )


def train_state(spec: ExperimentSpec, scenario: ScenarioConfig, trial_seed: int):
    """Run the offline solver for the spec's mode; returns (state, trace)."""
    outer = _outer_config(spec, trial_seed)
    inner = _inner_config(spec)
    fn = sample_function(spec)
    if spec.mode == "transmissive":
        return run_algorithm2(scenario, outer, inner, sample_fn=fn)
    return run_algorithm1(scenario, outer, inner, sample_fn=fn)


def baseline_state(spec: ExperimentSpec, scenario: ScenarioConfig, baseline: str):
    if baseline == "conventional":
        return identity_transmissive(scenario.M)
    if baseline == "fixed_mc":
        return fixed_mc_state(scenario.M, spec.seed)
    raise ValueError(f"no fixed state for baseline {baseline!r}")


def evaluate_state(spec: ExperimentSpec, scenario: ScenarioConfig, state, trial_seed: int):
    """Mean sum rate and MSE over the held-out evaluation channels."""
    inner = _inner_config(spec)
    fn = sample_function(spec)
    rates, mses = [], []
    for q in range(spec.eval_samples):
        sample = fn(scenario, substream(trial_seed, _S_EVAL_CHANNEL, q))
        _, sol = optimize_inner(
            sample,
            state,
            inner,
            scenario.P,
            scenario.noise_var,
            substream(trial_seed, _S_EVAL_INNER, q),
        )
        rates.append(sol.sum_rate)
        mses.append(sol.mse)
    return float(np.mean(rates)), float(np.mean(mses))


def run_cell(spec: ExperimentSpec, sweep_value: float, baseline: str) -> CellResult:
    scenario = build_scenario(spec, sweep_value)
    rates, mses, states, traces, failures = [], [], [], [], []
    iters = spec.outer_iters if baseline == "proposed" else 0
    for trial in range(spec.trials):
        tseed = cell_seed(spec.seed, trial)
        try:
            if baseline == "proposed":
                state, trace = train_state(spec, scenario, tseed)
            else:
                state, trace = baseline_state(spec, scenario, baseline), None
            rate, mse = evaluate_state(spec, scenario, state, tseed)
        except (SingularMatrixError, SolverError, GenerationError) as exc:
            log.warning(
                "cell (%s=%s, %s) trial %d aborted: %s",
                spec.sweep, sweep_value, baseline, trial, exc,
            )
            failures.append((trial, f"{type(exc).__name__}: {exc}"))
            rates.append(float("nan"))
            mses.append(float("nan"))
            states.append(None)
            traces.append(None)
            continue
        rates.append(rate)
        mses.append(mse)
        states.append(state)
        traces.append(trace)
    return CellResult(
        sweep_value=sweep_value,
        baseline=baseline,
        per_trial_rates=rates,
        per_trial_mses=mses,
        states=states,
        traces=traces,
        failures=failures,
        iters=iters,
    )


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Execute every (sweep value, baseline) cell; rows keep submission order."""
    jobs = [
        (value, baseline)
        for value in spec.values
        for baseline in spec.resolved_baselines()
    ]
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            cells = list(pool.map(lambda vb: run_cell(spec, *vb), jobs))
    else:
        cells = [run_cell(spec, value, baseline) for value, baseline in jobs]
    return ResultTable(spec=spec, cells=cells)


def format_row(spec: ExperimentSpec, cell: CellResult) -> str:
    return ",".join(
        [
            spec.sweep,
            _format_number(cell.sweep_value),
            cell.baseline,
            spec.mode,
            spec.channel_model,
            str(spec.trials),
            _format_number(cell.mean_rate()),
            _format_number(cell.std_rate()),
            _format_number(cell.mean_mse()),
            str(cell.iters),
        ]
    )


def results_csv_text(table: ResultTable) -> str:
    lines = [CSV_HEADER]
    lines += [format_row(table.spec, cell) for cell in table.cells]
    return "\n".join(lines) + "\n"


def manifest_text(table: ResultTable) -> str:
    spec = table.spec
    lines = [
        "# rismc run manifest (reloadable config; regenerate with:",
        "#   rismc --config <this file> --out <dir>)",
        f"# software_version = {__version__}",
    ]
    for key, value in spec_to_pairs(spec).items():
        lines.append(f"{key} = {value}")
    lines.append("# derived per-trial seeds (from 'seed' and the trial index):")
    for trial in range(spec.trials):
        lines.append(f"# trial_seed {trial} = {cell_seed(spec.seed, trial)}")
    for cell in table.cells:
        for trial, msg in cell.failures:
            lines.append(
                f"# aborted cell={spec.sweep}:{_format_number(cell.sweep_value)}"
                f" baseline={cell.baseline} trial={trial} error={msg}"
            )
    return "\n".join(lines) + "\n"


def write_scatter_state(state, path) -> None:
    """Serialize a scattering state with exact float round-trip.

    Header line: ``RIS-SCATTER v1 <kind> <M>``. Reflective states store two
    rows (coupling and pattern spectra); transmissive states store 2M rows
    (receive pattern rows, then transmit pattern rows). Rows are
    comma-separated re,im pairs, row-major.
    """
    def fmt(vec):
        return ",".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in vec)

    lines = []
    if isinstance(state, ReflectiveScattering):
        lines.append(f"RIS-SCATTER v1 reflective {state.M}")
        lines.append(fmt(state.sigma_aa))
        lines.append(fmt(state.sigma_ab))
    elif isinstance(state, TransmissiveScattering):
        lines.append(f"RIS-SCATTER v1 transmissive {state.M}")
        lines.extend(fmt(row) for row in state.s1)
        lines.extend(fmt(row) for row in state.s2)
    else:
        raise ValueError(f"cannot serialize {type(state).__name__}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_scatter_state(path):
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = text[0].split()
    if len(header) != 4 or header[0] != "RIS-SCATTER" or header[1] != "v1":
        raise ValueError(f"{path}: not a RIS-SCATTER v1 file")
    kind, m = header[2], int(header[3])

    def parse(line):
        nums = [float(tok) for tok in line.split(",")]
        re, im = nums[0::2], nums[1::2]
        return np.array(re) + 1j * np.array(im)

    rows = [parse(line) for line in text[1:] if line]
    if kind == "reflective":
        if len(rows) != 2:
            raise ValueError(f"{path}: reflective state needs 2 rows, found {len(rows)}")
        return ReflectiveScattering(rows[0], rows[1], two_dft(m))
    if kind == "transmissive":
        if len(rows) != 2 * m:
            raise ValueError(f"{path}: transmissive state needs {2*m} rows, found {len(rows)}")
        return TransmissiveScattering(np.stack(rows[:m]), np.stack(rows[m:]))
    raise ValueError(f"{path}: unknown state kind {kind!r}")


def _trace_csv(trace: OuterTrace) -> str:
    keys = sorted(trace.violations)
    lines = ["iter,mean_mse,mean_sum_rate," + ",".join(keys)]
    for i in range(trace.iterations):
        vals = [str(i), _format_number(trace.mean_mse[i]), _format_number(trace.mean_sum_rate[i])]
        vals += [_format_number(trace.violations[k][i]) for k in keys]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def emit_results(table: ResultTable, out_dir) -> dict[str, Path]:
    """Write results.csv, manifest.txt, per-cell states and traces to out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "manifest": out / "manifest.txt"}
    paths["results"].write_text(results_csv_text(table), encoding="utf-8")
    paths["manifest"].write_text(manifest_text(table), encoding="utf-8")

    states_dir = out / "states"
    traces_dir = out / "traces"
    spec = table.spec
    for cell in table.cells:
        tag = f"{spec.sweep}{_format_number(cell.sweep_value)}_{cell.baseline}"
        for trial, state in enumerate(cell.states):
            if state is None:
                continue
            states_dir.mkdir(exist_ok=True)
            write_scatter_state(state, states_dir / f"{tag}_t{trial}.scatter")
        for trial, trace in enumerate(cell.traces):
            if trace is None:
                continue
            traces_dir.mkdir(exist_ok=True)
            (traces_dir / f"{tag}_t{trial}.csv").write_text(
                _trace_csv(trace), encoding="utf-8"
            )
    paths["states"] = states_dir
    paths["traces"] = traces_dir
    return paths
