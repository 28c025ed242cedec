"""Experiment orchestration: map a config to simulation runs and tables.

Each experiment produces RunRecords (one per simulation) plus optional
extra tables. Runs are independent, so sweeps execute on a small process
pool when more than one core is available; records are reassembled in
request order, which keeps output files deterministic.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import capacity, oracle, simulator
from .config import ExperimentSpec
from .controller import UtilitySpec
from .simulator import (MetricsReport, SimConfig, TrafficConfig, UtilitySwitch,
                        make_config, run)
from .topology import build_benes


@dataclass
class RunRecord:
    label: str
    report: MetricsReport
    oracle_optimum: float

    @property
    def utility_gap_pct(self) -> float:
        if self.oracle_optimum == 0:
            return 0.0
        return 100.0 * (self.oracle_optimum - self.report.utility) / self.oracle_optimum

    @property
    def analytic_floor(self) -> float:
        """Worst-case utility guarantee; far below the optimum at desk scale."""
        rep = self.report
        beta = float(rep.phases[-1].weights.max()) if rep.phases else 1.0
        params = GbpParams(v=rep.v, eta=rep.eta, a_max=rep.a_max, beta=beta)
        return utility_lower_bound(self.oracle_optimum, params, rep.n)


@dataclass
class ExperimentResult:
    experiment: str
    records: List[RunRecord] = field(default_factory=list)
    scaling_rows: List[Dict[str, float]] = field(default_factory=list)
    capacity_rows: List[Dict[str, float]] = field(default_factory=list)
    adaptation_rates: Dict[float, float] = field(default_factory=dict)


def run_many(configs: Sequence[SimConfig], parallel: Optional[bool] = None) -> List[MetricsReport]:
    """Execute runs, on a process pool when it can help.

    Results come back in input order regardless of completion order.
    Custom utility bases are callables that may not pickle, so those
    configs fall back to the serial path.
    """
    if parallel is None:
        parallel = (len(configs) > 1 and (os.cpu_count() or 1) > 1
                    and all(c.utility.base is None for c in configs))
    if not parallel or len(configs) == 1:
        return [run(c) for c in configs]
    workers = min(len(configs), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))


def _base_config(spec: ExperimentSpec, v: float, **overrides) -> SimConfig:
    traffic = None
    if spec.traffic == "iid":
        traffic = TrafficConfig(kind="iid", mean=spec.lam)
    kwargs = dict(n=spec.n, v=v, eta=spec.eta, a_max=spec.a_max, slots=spec.slots,
                  seed=spec.seed, weight=spec.weight, traffic=traffic,
                  bias_enhanced=spec.bias_enhanced)
    kwargs.update(overrides)
    return make_config(**kwargs)


def _optimum(n: int, weight: float) -> float:
    utility = UtilitySpec.uniform_log(n, weight)
    return oracle.solve_optimum(utility, n, eta=0.0).utility


def run_experiment(spec: ExperimentSpec, check_invariants: bool = False,
                   parallel: Optional[bool] = None) -> ExperimentResult:
    result = ExperimentResult(experiment=spec.experiment)

    if spec.experiment == "utility_sweep":
        configs = [_base_config(spec, v, check_invariants=check_invariants)
                   for v in spec.v]
        reports = run_many(configs, parallel)
        opt = _optimum(spec.n, spec.weight)
        for v, rep in zip(spec.v, reports):
            result.records.append(RunRecord(label=f"V={v:g}", report=rep,
                                            oracle_optimum=opt))

    elif spec.experiment == "robustness":
        v = spec.v[0]
        configs = [_base_config(spec, v, variant=var,
                                check_invariants=check_invariants and var == "exact")
                   for var in spec.variant]
        reports = run_many(configs, parallel)
        opt = _optimum(spec.n, spec.weight)
        for var, rep in zip(spec.variant, reports):
            result.records.append(RunRecord(label=var, report=rep, oracle_optimum=opt))

    elif spec.experiment == "adaptation":
        v = spec.v[0]
        switch = UtilitySwitch(slot=spec.slots // 2)
        cfg = _base_config(spec, v, utility_switch=switch,
                           check_invariants=check_invariants)
        rep = simulator.run_utility_switch(cfg)
        post = rep.phases[-1]
        post_opt = oracle.solve_optimum(UtilitySpec(weights=post.weights),
                                        spec.n, eta=0.0).utility
        result.records.append(RunRecord(label=f"switch@{switch.slot}", report=rep,
                                        oracle_optimum=post_opt))
        result.adaptation_rates = rep.rates_by_weight()

    elif spec.experiment == "scaling":
        v = spec.v[0]
        configs = []
        for nv in spec.n_values:
            for bias in (False, True):
                configs.append(make_config(n=nv, v=v, eta=spec.eta, a_max=spec.a_max,
                                           slots=spec.scaling_slots, seed=spec.seed,
                                           weight=spec.weight, bias_enhanced=bias,
                                           check_invariants=False))
        reports = run_many(configs, parallel)
        for idx, nv in enumerate(spec.n_values):
            plain, biased = reports[2 * idx], reports[2 * idx + 1]
            opt = _optimum(nv, spec.weight)
            result.records.append(RunRecord(label=f"n={nv}", report=plain,
                                            oracle_optimum=opt))
            result.records.append(RunRecord(label=f"n={nv}+bias", report=biased,
                                            oracle_optimum=opt))
            result.scaling_rows.append({
                "n": nv,
                "avg_delay": plain.avg_delay,
                "avg_delay_over_n2": plain.avg_delay / nv ** 2,
                "enhanced_delay": biased.avg_delay,
                "enhanced_delay_over_n2": biased.avg_delay / nv ** 2,
            })

    elif spec.experiment == "invariants":
        cfg = _base_config(spec, spec.v[0], check_invariants=True)
        rep = run(cfg)
        result.records.append(RunRecord(label=f"V={spec.v[0]:g}", report=rep,
                                        oracle_optimum=_optimum(spec.n, spec.weight)))

    elif spec.experiment == "capacity_check":
        import time
        rng = np.random.default_rng(spec.seed)
        for nv in range(2, 7):
            topo = build_benes(nv)
            started = time.perf_counter()
            violations = 0
            samples = 100
            for _ in range(samples):
                r = capacity.sample_interior_rates(nv, rng)
                profile = capacity.build_stabilizing_profile(r, topo)
                violations += len(capacity.verify_profile(profile, r, topo))
            result.capacity_rows.append({
                "n": nv,
                "samples": samples,
                "violations": violations,
                "seconds": time.perf_counter() - started,
            })

    else:
        raise ValueError(f"unknown experiment {spec.experiment!r}")

    return result
