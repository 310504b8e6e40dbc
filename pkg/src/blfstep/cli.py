"""Configuration parsing, run orchestration, and CSV/report emission.

The run configuration is a single JSON document with tagged signal
records. Parsing is strict: unknown keys, missing fields, and invariant
violations are reported as field-level diagnostics naming the offending
key. Exit codes encode the run outcome so CI can assert a reproduction
without parsing text: 0 all checks pass, 1 configuration problem,
2 constraint failure or numerical blowup.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

import numpy as np

from .approximator import RbfError, RbfNetwork
from .barrier import BarrierViolation
from .controller import (
    ConstraintConfig,
    ControllerError,
    GainConfig,
    lyapunov_decay_rates,
)
from .observer import gain_warnings
from .plant import Monomial, PlantError, PlantSpec
from .signals import SignalError, signal_from_dict, signal_to_dict
from .simengine import (
    InfeasibleInitialCondition,
    NonFiniteState,
    RunConfig,
    SimResult,
    run,
)


class ConfigError(ValueError):
    """Invalid run configuration, with field-level diagnostics."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"  {path}: {message}" for path, message in self.problems]
        super().__init__("invalid configuration:\n" + "\n".join(lines))


class _Collector:
    def __init__(self):
        self.problems = []

    def error(self, path: str, message: str) -> None:
        self.problems.append((path, message))

    def raise_if_any(self) -> None:
        if self.problems:
            raise ConfigError(self.problems)


def _check_keys(record: dict, allowed, required, path: str, col: _Collector) -> bool:
    ok = True
    for key in required:
        if key not in record:
            col.error(f"{path}.{key}" if path else key, "missing required field")
            ok = False
    unknown = set(record) - set(allowed)
    for key in sorted(unknown):
        col.error(f"{path}.{key}" if path else key, "unknown key")
        ok = False
    return ok


def _number(record: dict, key: str, path: str, col: _Collector):
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        col.error(f"{path}.{key}", f"expected a number, got {value!r}")
        return None
    return float(value)


def _int(record: dict, key: str, path: str, col: _Collector):
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, int):
        col.error(f"{path}.{key}", f"expected an integer, got {value!r}")
        return None
    return value


def _number_list(record: dict, key: str, path: str, col: _Collector):
    value = record[key]
    if not isinstance(value, list) or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
    ):
        col.error(f"{path}.{key}", f"expected a list of numbers, got {value!r}")
        return None
    return [float(v) for v in value]


def _parse_signal(record, path: str, col: _Collector):
    try:
        return signal_from_dict(record, path)
    except SignalError as exc:
        col.error(path, str(exc))
        return None


def _parse_plant(record, col: _Collector) -> PlantSpec | None:
    path = "plant"
    if not isinstance(record, dict):
        col.error(path, "expected an object")
        return None
    if not _check_keys(record, ("n", "f", "beta", "disturbances"),
                       ("n", "f", "beta", "disturbances"), path, col):
        return None
    n = _int(record, "n", path, col)
    beta = _number(record, "beta", path, col)
    monos = []
    if not isinstance(record["f"], list):
        col.error(f"{path}.f", "expected a list of monomials")
        return None
    for i, mrec in enumerate(record["f"]):
        mpath = f"{path}.f[{i}]"
        if not isinstance(mrec, dict) or set(mrec) != {"coeff", "exponents"}:
            col.error(mpath, 'expected {"coeff": ..., "exponents": [...]}')
            continue
        coeff = _number(mrec, "coeff", mpath, col)
        exps = mrec["exponents"]
        if not isinstance(exps, list) or any(
            isinstance(e, bool) or not isinstance(e, int) for e in exps
        ):
            col.error(f"{mpath}.exponents", "expected a list of integers")
            continue
        if coeff is not None:
            try:
                monos.append(Monomial(coeff, tuple(exps)))
            except PlantError as exc:
                col.error(mpath, str(exc))
    if not isinstance(record["disturbances"], list):
        col.error(f"{path}.disturbances", "expected a list of signal records")
        return None
    dist = [
        _parse_signal(d, f"{path}.disturbances[{i}]", col)
        for i, d in enumerate(record["disturbances"])
    ]
    if n is None or beta is None or any(d is None for d in dist):
        return None
    try:
        return PlantSpec(n=n, f=tuple(monos), beta=beta, disturbances=tuple(dist))
    except PlantError as exc:
        col.error(path, str(exc))
        return None


def _parse_constraints(record, col: _Collector) -> ConstraintConfig | None:
    path = "constraints"
    if not isinstance(record, dict):
        col.error(path, "expected an object")
        return None
    if not _check_keys(record, ("Psi", "A"), ("Psi", "A"), path, col):
        return None
    if not isinstance(record["Psi"], list):
        col.error(f"{path}.Psi", "expected a list of signal records")
        return None
    bounds = [
        _parse_signal(b, f"{path}.Psi[{i}]", col) for i, b in enumerate(record["Psi"])
    ]
    reserves = _number_list(record, "A", path, col)
    if any(b is None for b in bounds) or reserves is None:
        return None
    try:
        return ConstraintConfig(tuple(bounds), tuple(reserves))
    except ControllerError as exc:
        col.error(path, str(exc))
        return None


def _parse_rbf(record, n: int | None, col: _Collector) -> RbfNetwork | None:
    path = "rbf"
    if not isinstance(record, dict):
        col.error(path, "expected an object")
        return None
    if not _check_keys(record, ("l", "centers", "widths"), ("l",), path, col):
        return None
    nodes = _int(record, "l", path, col)
    if nodes is None:
        return None
    has_centers = "centers" in record
    has_widths = "widths" in record
    if has_centers != has_widths:
        col.error(path, "centers and widths must be given together or both omitted")
        return None
    try:
        if not has_centers:
            if n is None:
                return None
            return RbfNetwork.lattice(nodes, n)
        centers = record["centers"]
        widths = record["widths"]
        net = RbfNetwork(centers, widths)
        if net.l != nodes:
            col.error(f"{path}.centers", f"{net.l} centers listed but l = {nodes}")
            return None
        return net
    except (RbfError, ValueError) as exc:
        col.error(path, str(exc))
        return None


def _parse_gains(record, col: _Collector) -> GainConfig | None:
    path = "gains"
    if not isinstance(record, dict):
        col.error(path, "expected an object")
        return None
    if not _check_keys(record, ("k", "lambda", "eta", "delta"), ("k", "lambda", "eta"), path, col):
        return None
    k = _number_list(record, "k", path, col)
    lam = _number(record, "lambda", path, col)
    eta = _number(record, "eta", path, col)
    delta = _number(record, "delta", path, col) if "delta" in record else 1e-4
    if k is None or lam is None or eta is None or delta is None:
        return None
    try:
        return GainConfig(k=tuple(k), lam=lam, eta=eta, delta=delta)
    except ControllerError as exc:
        col.error(path, str(exc))
        return None


_TOP_KEYS = (
    "plant", "constraints", "rbf", "gains", "observer_gains", "reference",
    "horizon", "step", "decimation", "initial_x", "output_path",
)
_TOP_REQUIRED = (
    "plant", "constraints", "rbf", "gains", "observer_gains", "reference", "initial_x",
)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON run configuration.

    Raises ConfigError carrying (path, message) diagnostics for every
    problem found; unknown keys are errors.
    """
    col = _Collector()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("(document)", f"malformed JSON: {exc}")]) from exc
    if not isinstance(doc, dict):
        raise ConfigError([("(document)", "expected a JSON object")])

    _check_keys(doc, _TOP_KEYS, _TOP_REQUIRED, "", col)
    col.raise_if_any()

    plant = _parse_plant(doc["plant"], col)
    constraints = _parse_constraints(doc["constraints"], col)
    rbf = _parse_rbf(doc["rbf"], plant.n if plant else None, col)
    gains = _parse_gains(doc["gains"], col)
    observer_gains = _number_list(doc, "observer_gains", "", col)
    reference = _parse_signal(doc["reference"], "reference", col)
    initial_x = _number_list(doc, "initial_x", "", col)

    horizon = _number(doc, "horizon", "", col) if "horizon" in doc else 20.0
    step = _number(doc, "step", "", col) if "step" in doc else 1e-3
    decimation = _int(doc, "decimation", "", col) if "decimation" in doc else 10
    output_path = None
    if "output_path" in doc:
        if not isinstance(doc["output_path"], str):
            col.error(".output_path", f"expected a string, got {doc['output_path']!r}")
        else:
            output_path = doc["output_path"]
    col.raise_if_any()

    if horizon is not None and horizon < 0:
        col.error(".horizon", f"must be >= 0, got {horizon}")
    if step is not None and not step > 0:
        col.error(".step", f"must be > 0, got {step}")
    if decimation is not None and decimation < 1:
        col.error(".decimation", f"must be >= 1, got {decimation}")
    if plant is not None:
        if constraints is not None and constraints.n != plant.n:
            col.error("constraints.Psi", f"{constraints.n} levels for a plant of order {plant.n}")
        if observer_gains is not None and len(observer_gains) != plant.n:
            col.error(".observer_gains", f"need {plant.n} gains, got {len(observer_gains)}")
        if gains is not None and len(gains.k) != plant.n:
            col.error("gains.k", f"need {plant.n} gains, got {len(gains.k)}")
        if initial_x is not None and len(initial_x) != plant.n:
            col.error(".initial_x", f"need {plant.n} entries, got {len(initial_x)}")
    if observer_gains is not None:
        for i, g in enumerate(observer_gains):
            if not g > 0:
                col.error(f".observer_gains[{i}]", f"must be > 0, got {g}")
    col.raise_if_any()

    return RunConfig(
        plant=plant,
        constraints=constraints,
        rbf=rbf,
        gains=gains,
        observer_gains=tuple(observer_gains),
        reference=reference,
        horizon=horizon,
        step=step,
        decimation=decimation,
        initial_x=tuple(initial_x),
        output_path=output_path,
    )


def config_to_dict(config: RunConfig) -> dict:
    """Serialize a RunConfig back to its JSON document form."""
    doc = {
        "plant": {
            "n": config.plant.n,
            "f": [{"coeff": m.coeff, "exponents": list(m.exponents)} for m in config.plant.f],
            "beta": config.plant.beta,
            "disturbances": [signal_to_dict(d) for d in config.plant.disturbances],
        },
        "constraints": {
            "Psi": [signal_to_dict(b) for b in config.constraints.state_bounds],
            "A": list(config.constraints.virtual_bounds),
        },
        "rbf": {
            "l": config.rbf.l,
            "centers": config.rbf.centers.tolist(),
            "widths": config.rbf.widths.tolist(),
        },
        "gains": {
            "k": list(config.gains.k),
            "lambda": config.gains.lam,
            "eta": config.gains.eta,
            "delta": config.gains.delta,
        },
        "observer_gains": list(config.observer_gains),
        "reference": signal_to_dict(config.reference),
        "horizon": config.horizon,
        "step": config.step,
        "decimation": config.decimation,
        "initial_x": list(config.initial_x),
    }
    if config.output_path is not None:
        doc["output_path"] = config.output_path
    return doc


def paper_sec6_path() -> str:
    """Filesystem path of the bundled flagship configuration."""
    return str(resources.files("blfstep.configs") / "paper_sec6.json")


def load_config_file(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(value: float) -> str:
    return repr(float(value))


def csv_header(n: int) -> list:
    cols = ["t"]
    cols += [f"x{i}" for i in range(1, n + 1)]
    cols += [f"Psi{i}" for i in range(1, n + 1)]
    cols += [f"psi{i}" for i in range(1, n + 1)]
    cols += [f"z{i}" for i in range(1, n + 1)]
    cols += [f"v{i}" for i in range(1, n)]
    cols += ["u"]
    cols += [f"eps_hat{i}" for i in range(1, n + 1)]
    cols += [f"zeta{i}" for i in range(1, n + 1)]
    cols += ["theta_norm", "y_d"]
    return cols


def emit_csv(result: SimResult, path: str) -> None:
    """Write the recorded trajectory as CSV, one row per recorded step.

    Numbers are written in round-trippable decimal form, so reading a
    cell back with float() reproduces the in-memory value exactly.
    """
    cfg = result.config
    n = cfg.plant.n
    lines = [",".join(csv_header(n))]
    for t, state, rec in zip(result.times, result.trajectory, result.records):
        t = float(t)
        x = state[:n]
        zeta = state[2 * n:3 * n]
        theta = state[3 * n:]
        row = [t]
        row += [x[i] for i in range(n)]
        row += [cfg.constraints.state_bound(i, t) for i in range(n)]
        row += [cfg.constraints.envelope(i, t) for i in range(n)]
        row += [rec.z[i] for i in range(n)]
        row += [rec.v[i] for i in range(n - 1)]
        row += [rec.u]
        row += [rec.eps_hat[i] for i in range(n)]
        row += [zeta[i] for i in range(n)]
        row += [float(np.linalg.norm(theta)), cfg.reference.value(t)]
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _ratio_line(label: str, ratios) -> str:
    body = ", ".join(f"{r:.4f}" for r in ratios)
    return f"  {label}: {body}"


def emit_report(outcome) -> str:
    """Human-readable run summary.

    Accepts a completed SimResult or one of the run's failure exceptions
    (BarrierViolation, InfeasibleInitialCondition, NonFiniteState).
    """
    if isinstance(outcome, BarrierViolation):
        return (
            "run aborted\n"
            f"constraints: FAIL at level {outcome.level}, t={outcome.t:.6g}\n"
            f"  |z| = {abs(outcome.z):.6g} reached psi = {outcome.psi:.6g}\n"
        )
    if isinstance(outcome, InfeasibleInitialCondition):
        return (
            "run not started\n"
            f"initial condition: FAIL at level {outcome.level}\n"
            f"  |z({outcome.level})(0)| = {abs(outcome.z0):.6g} >= psi({outcome.level})(0) "
            f"= {outcome.psi0:.6g}\n"
        )
    if isinstance(outcome, NonFiniteState):
        return (
            "run aborted\n"
            f"state: FAIL non-finite at t={outcome.t:.6g}\n"
        )

    result: SimResult = outcome
    cfg = result.config
    m = result.metrics
    n = cfg.plant.n
    constraints_ok = bool(np.all(m.max_constraint_ratio < 1.0))
    tail_start = result.times[-1] / 2.0 if len(result.times) else 0.0

    early = [abs(rec.z[0]) for t, rec in zip(result.times, result.records) if t <= 2.0]
    late = [abs(rec.z[0]) for t, rec in zip(result.times, result.records) if t >= tail_start]
    transient_ok = bool(late and early and max(late) < max(early))

    lines = ["closed-loop run report", ""]
    lines.append(f"horizon: {cfg.horizon:g} s   step: {cfg.step:g} s   levels: {n}   "
                 f"rbf nodes: {cfg.rbf.l}")
    lines.append("")
    lines.append(f"constraints: {'PASS' if constraints_ok else 'FAIL'}")
    lines.append(_ratio_line("max |x_i| / Psi_i", m.max_constraint_ratio))
    lines.append(_ratio_line("max |z_i| / psi_i", m.max_error_ratio))
    lines.append("boundedness: PASS")
    lines.append(f"  max |u| = {m.max_abs_u:.6g}   max ||theta|| = {m.max_theta_norm:.6g}")
    lines.append(_ratio_line("max |zeta_i|", m.max_abs_zeta))
    lines.append(_ratio_line("max |eps_hat_i|", m.max_abs_eps_hat))
    lines.append(_ratio_line("max |d eps_hat_i/dt| (diagnostic)", m.max_abs_eps_hat_rate))
    lines.append(f"tracking transient decay: {'PASS' if transient_ok else 'FAIL'}")
    lines.append(f"  rmse of y - y_d over [{tail_start:g}, {cfg.horizon:g}]: "
                 f"{m.tracking_rmse_tail:.6g}")
    lines.append("")

    basis_bound = cfg.rbf.norm_bound()
    rates = lyapunov_decay_rates(cfg.gains, cfg.observer_gains, basis_bound)
    lines.append("diagnostics")
    lines.append("  guaranteed decay rates mu: " + ", ".join(f"{r:g}" for r in rates))
    for i, r in enumerate(rates):
        if r <= 0:
            lines.append(
                f"  warning: mu[{i + 1}] = {r:g} is not positive under the conservative "
                f"basis bound {basis_bound:.4f}; the sufficient stability condition is "
                "not certified for this configuration"
            )
    for w in gain_warnings(cfg.observer_gains, basis_bound):
        lines.append(f"  warning: {w}")
    ref_peak = max((abs(cfg.reference.value(float(t))) for t in result.times), default=0.0)
    ref_reserve = cfg.constraints.virtual_bounds[0]
    lines.append(f"  reference bound: max |y_d| = {ref_peak:.6g} vs A[0] = {ref_reserve:g} : "
                 f"{'OK' if ref_peak <= ref_reserve else 'EXCEEDED'}")
    for i in range(n - 1):
        reserve = cfg.constraints.virtual_bounds[i + 1]
        seen = m.observed_max_abs_v[i]
        status = "OK" if seen <= reserve else "EXCEEDED"
        lines.append(f"  virtual control bound: max |v{i + 1}| = {seen:.6g} vs "
                     f"A[{i + 1}] = {reserve:g} : {status}")
        if seen > reserve:
            lines.append(
                f"  warning: |v{i + 1}| exceeded its configured reserve; the state "
                "constraint argument's premise did not hold for this run"
            )
    lines.append("")
    verdict = constraints_ok
    lines.append(f"verdict: {'PASS' if verdict else 'FAIL'}")
    return "\n".join(lines) + "\n"


def verdict_code(outcome) -> int:
    """0 when all constraint checks pass, 2 otherwise."""
    if isinstance(outcome, (BarrierViolation, NonFiniteState)):
        return 2
    if isinstance(outcome, InfeasibleInitialCondition):
        return 1
    return 0 if bool(np.all(outcome.metrics.max_constraint_ratio < 1.0)) else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blfstep",
        description="Constrained adaptive backstepping simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run one closed-loop simulation")
    sim.add_argument("config", help="path to a JSON run configuration "
                                    "(the name of a bundled config also works)")
    sim.add_argument("--out", help="write the recorded trajectory as CSV to this path")
    sim.add_argument("--report", help="also write the text report to this path")
    sim.add_argument("--step", type=float, help="override the integration step")
    sim.add_argument("--horizon", type=float, help="override the horizon")
    args = parser.parse_args(argv)

    try:
        try:
            config = load_config_file(args.config)
        except FileNotFoundError:
            bundled = resources.files("blfstep.configs") / args.config
            if bundled.is_file():
                print(f"using bundled configuration {args.config}", file=sys.stderr)
                config = parse_config(bundled.read_text(encoding="utf-8"))
            else:
                print(f"error: no such configuration file: {args.config}", file=sys.stderr)
                return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.step is not None:
        if not args.step > 0:
            print(f"error: --step must be > 0, got {args.step}", file=sys.stderr)
            return 1
        config.step = args.step
    if args.horizon is not None:
        if args.horizon < 0:
            print(f"error: --horizon must be >= 0, got {args.horizon}", file=sys.stderr)
            return 1
        config.horizon = args.horizon

    try:
        outcome = run(config)
    except (BarrierViolation, InfeasibleInitialCondition, NonFiniteState) as exc:
        outcome = exc

    if isinstance(outcome, SimResult):
        out_path = args.out or config.output_path
        if out_path:
            emit_csv(outcome, out_path)

    report = emit_report(outcome)
    print(report, end="")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report)
    return verdict_code(outcome)


if __name__ == "__main__":
    sys.exit(main())
