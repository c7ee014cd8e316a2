"""
experiment.py

Experiment configuration, synthetic instance generation and the per-seed pipeline.

An `ExperimentRunner` coordinates the stages for one seed the way a parser coordinator
walks the sections of a log: each stage runs in turn, its errors are caught, tagged with the
stage name and collected, and stages whose inputs are missing are skipped with an explicit
ledger entry. `run_pipeline` fans the seeds out over a process pool and writes the files
shared by all seeds.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import shutil
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from . import __version__
from .canonical_paths import (PiGmapCheck, RatioLemmaCheck, build_tree, edge_loadings, hop_growth_check,
                              log_sinclair_bound, max_log_loading, path_length_cases, sinclair_bound)
from .errors import ConfigInvalid, EwaChainError, NoConvergence, ResourceCapExceeded
from .initializer import (LassoConfig, duality_gap, estimate_kappa, fit_lasso, initializer_report,
                          lambda_max_restricted, threshold_support)
from .oracle import (build_exact_chain, check_assumptions, check_events, log_inverse_gap, log_tv_bound, mixing_time,
                     noise_projection_max, second_largest_modulus, spectral_gap, tv_bound_violations,
                     tv_decay)
from .posterior import Posterior, exp_or_inf
from .problem import ChainConfig, ProblemInstance, d_choice_minimum, normalize_columns
from .projection import ProjectionLemmaCheck, restricted_nu
from .proposal import empirical_distribution, run_chain
from .report import (DiagnosticsReport, config_hash, judged, skipped, write_dot, write_error_log,
                     write_event_frequencies, write_golden_table, write_json, write_loadings_csv,
                     write_trace_csv, write_tv_csv)
from .rng import spawn_rngs
from .subsets import MAX_WIDTH

OUTPUT_ENV = "EWACHAIN_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "./RunResults/"

STAGES = ("gen", "init", "events", "sample", "oracle", "paths", "mixing")
DEPENDS = {"gen": (), "init": ("gen",), "events": ("init",), "sample": ("init",),
           "oracle": ("init",), "paths": ("oracle",), "mixing": ("oracle",)}
COMMANDS = {
    "gen": ("gen",),
    "init": ("gen", "init"),
    "sample": ("gen", "init", "sample"),
    "oracle": ("gen", "init", "events", "oracle"),
    "paths": ("gen", "init", "events", "oracle", "paths"),
    "mixing": ("gen", "init", "events", "oracle", "mixing"),
    "suite": STAGES,
}

# Nested JSON sections and the flat fields they fill.
SECTIONS = {
    "theta": {"support": "support", "magnitude": "magnitude", "signs": "signs"},
    "lasso": {"alpha": "alpha", "kappa": "kappa", "kappa_samples": "kappa_samples",
              "max_iter": "lasso_max_iter", "tol": "lasso_tol"},
    "chain": {"beta": "beta", "D": "D", "c": "c", "L": "L", "L_margin": "L_margin"},
    "caps": {"oracle": "oracle_cap", "loading": "loading_cap", "enumeration": "enumeration_cap"},
}


@dataclass
class ExperimentConfig:
    """
    ExperimentConfig describes one experiment: how instances are generated, the initializer
    and chain constants (None means derived from the instance), the sampler run, and caps.

    Notes:
        `from_dict` also accepts the nested form {"theta": {...}, "lasso": {...},
        "chain": {...}, "caps": {...}}. Unknown keys are rejected.
    """
    n: int = 32
    p: int = 6
    s_star: int = 1
    design: str = "orthogonal"
    design_file: Optional[str] = None
    support: object = "random"
    magnitude: object = "auto"
    signs: str = "random"
    sigma: float = 1.0
    alpha: float = 10.0
    kappa: Optional[float] = None
    kappa_samples: int = 200
    lasso_max_iter: int = 10000
    lasso_tol: float = 1e-10
    beta: float = 2.0
    D: Optional[float] = None
    c: Optional[float] = None
    L: Optional[float] = None
    L_margin: float = 1.25
    steps: int = 10000
    lazy: bool = True
    eps: float = 0.05
    tv_steps: int = 500
    seeds: list = field(default_factory=lambda: [42])
    outputs: Optional[str] = None
    oracle_cap: int = 2**12
    loading_cap: int = 2**10
    enumeration_cap: int = 2**20
    workers: int = 1

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, payload, base=None):
        """Config from a (possibly nested) dict, layered over `base` when given."""
        flat = {}
        for key, value in payload.items():
            if key in SECTIONS:
                if not isinstance(value, dict):
                    raise ConfigInvalid(f"Section '{key}' must be an object.")
                for sub, sub_value in value.items():
                    if sub not in SECTIONS[key]:
                        raise ConfigInvalid(f"Unknown key '{key}.{sub}' in config.")
                    flat[SECTIONS[key][sub]] = sub_value
            else:
                flat[key] = value
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(flat) - names)
        if unknown:
            raise ConfigInvalid(f"Unknown config keys: {', '.join(unknown)}.")
        if base is None:
            return cls(**flat)
        return dataclasses.replace(base, **flat)

    @classmethod
    def from_json(cls, path, base=None):
        try:
            with open(path, "r") as f:
                payload = json.load(f)
        except FileNotFoundError as e:
            raise ConfigInvalid(f"Config file {path} does not exist.") from e
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(payload, dict):
            raise ConfigInvalid(f"Config file {path} must hold a JSON object.")
        if payload.get("design_file") and not os.path.isabs(payload["design_file"]):
            payload["design_file"] = os.path.join(os.path.dirname(os.path.abspath(path)), payload["design_file"])
        return cls.from_dict(payload, base=base)

    def to_dict(self):
        return dataclasses.asdict(self)

    @property
    def hash(self):
        payload = self.to_dict()
        for key in ("outputs", "workers"):
            payload.pop(key)
        return config_hash(payload)

    def output_dir(self):
        if self.outputs:
            return Path(self.outputs)
        return Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT_DIR)

    def validate(self):
        def positive(name, allow_none=False):
            value = getattr(self, name)
            if value is None and allow_none:
                return
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ConfigInvalid(f"{name}={value!r} must be a positive number.")

        for name in ("n", "p", "s_star", "kappa_samples", "lasso_max_iter", "oracle_cap", "loading_cap",
                     "enumeration_cap", "workers"):
            if isinstance(getattr(self, name), bool) or not isinstance(getattr(self, name), int):
                raise ConfigInvalid(f"{name}={getattr(self, name)!r} must be an integer.")
            positive(name)
        for name in ("sigma", "alpha", "lasso_tol", "beta", "L_margin"):
            positive(name)
        for name in ("kappa", "D", "c", "L"):
            positive(name, allow_none=True)
        if self.p > MAX_WIDTH:
            raise ConfigInvalid(f"p={self.p} exceeds the supported maximum of {MAX_WIDTH}.")
        if self.s_star > self.p:
            raise ConfigInvalid(f"s_star={self.s_star} exceeds p={self.p}.")
        if self.design not in ("gaussian", "orthogonal", "custom"):
            raise ConfigInvalid(f"Unknown design '{self.design}'; expected gaussian, orthogonal or custom.")
        if self.design == "orthogonal" and self.p > self.n:
            raise ConfigInvalid(f"An orthogonal design needs p <= n, got p={self.p}, n={self.n}.")
        if self.design == "custom" and (not self.design_file or not os.path.exists(self.design_file)):
            raise ConfigInvalid(f"Custom design file {self.design_file!r} does not exist.")
        if self.support != "random":
            if not isinstance(self.support, list) or not all(isinstance(j, int) for j in self.support):
                raise ConfigInvalid("support must be 'random' or a list of column indices.")
            if len(set(self.support)) != len(self.support) or len(self.support) > self.s_star:
                raise ConfigInvalid(f"support {self.support} must hold at most s_star={self.s_star} distinct indices.")
            if any(not 0 <= j < self.p for j in self.support):
                raise ConfigInvalid(f"support {self.support} has indices outside 0..{self.p - 1}.")
        if self.magnitude != "auto":
            positive("magnitude")
        if self.signs not in ("random", "positive"):
            raise ConfigInvalid(f"signs={self.signs!r} must be 'random' or 'positive'.")
        if not isinstance(self.steps, int) or self.steps < 0 or not isinstance(self.tv_steps, int) or self.tv_steps < 0:
            raise ConfigInvalid("steps and tv_steps must be nonnegative integers.")
        if not 0 < self.eps < 1:
            raise ConfigInvalid(f"eps={self.eps} must lie in (0, 1).")
        if not isinstance(self.seeds, list) or not self.seeds or not all(
                isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in self.seeds):
            raise ConfigInvalid(f"seeds={self.seeds!r} must be a nonempty list of nonnegative integers.")

    def lasso_config(self, kappa):
        return LassoConfig(alpha=self.alpha, kappa=kappa, max_iter=self.lasso_max_iter, tol=self.lasso_tol)


@dataclass(frozen=True)
class DesignConstants:
    """Constants measured on a generated design and noise draw, in the order they are derived."""
    nu: float
    lambda_max: float
    kappa: float
    c: float
    smallest_L: float
    L: float
    D: float
    theta_min: float


def _design_matrix(ecfg, rng):
    n, p = ecfg.n, ecfg.p
    if ecfg.design == "gaussian":
        X = rng.standard_normal((n, p))
    elif ecfg.design == "orthogonal":
        if n & (n - 1) == 0:
            cols = rng.choice(n, size=p, replace=False)
            signs = rng.choice([-1.0, 1.0], size=p)
            X = scipy.linalg.hadamard(n).astype(float)[:, cols] * signs
        else:
            Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
            X = Q * math.sqrt(n)
    else:
        path = ecfg.design_file
        X = np.load(path) if path.endswith(".npy") else np.loadtxt(path, delimiter=",", ndmin=2)
        if X.shape != (n, p):
            raise ConfigInvalid(f"Custom design in {path} has shape {X.shape}, expected ({n}, {p}).")
    return normalize_columns(X)


def generate(ecfg, seed):
    """
    Generates one instance and the constants measured on it. Returns (instance, constants).

    Order of derivation: design X (normalized) and nu over |S| <= 6 s*; the noise; L as
    L_margin times the smallest L making the noise-projection event hold (at least 1);
    kappa and c = 4 alpha^2 Lambda_max / kappa^4; D from its defining inequality; theta with
    min |theta_j| = 1.1 sqrt(8 beta D log p / (n nu^2)) under the default policy.
    """
    design_rng, noise_rng, signal_rng, kappa_rng = spawn_rngs(seed, 4)
    n, p, s_star = ecfg.n, ecfg.p, ecfg.s_star
    X = _design_matrix(ecfg, design_rng)
    nu = min(restricted_nu(X, 6 * s_star, cap=ecfg.enumeration_cap), 1.0)
    if nu <= 0:
        raise ConfigInvalid(f"Design is rank deficient on supports of size {min(6 * s_star, p)}; nu = 0.")
    epsilon = ecfg.sigma * noise_rng.standard_normal(n)

    log_p = math.log(p)
    smallest_L = (noise_projection_max(X, epsilon, 6 * s_star, cap=ecfg.enumeration_cap) / (n * nu * log_p)
                  if log_p > 0 else 0.0)
    L = ecfg.L if ecfg.L is not None else max(ecfg.L_margin * smallest_L, 1.0)
    lambda_max = lambda_max_restricted(X, s_star)
    kappa = ecfg.kappa if ecfg.kappa is not None else estimate_kappa(X, s_star, ecfg.kappa_samples, kappa_rng)
    if not kappa > 0:
        raise ConfigInvalid(f"Estimated kappa={kappa:.3g} is not positive; supply kappa in the config.")
    c = ecfg.c if ecfg.c is not None else 4 * ecfg.alpha**2 * lambda_max / kappa**4
    D = ecfg.D if ecfg.D is not None else d_choice_minimum(ecfg.beta, c, L)
    if ecfg.magnitude == "auto":
        theta_min = 1.1 * math.sqrt(8 * ecfg.beta * D * log_p / (n * nu**2))
    else:
        theta_min = float(ecfg.magnitude)

    if ecfg.support == "random":
        support = np.sort(signal_rng.choice(p, size=s_star, replace=False))
    else:
        support = np.array(sorted(ecfg.support), dtype=int)
    signs = signal_rng.choice([-1.0, 1.0], size=len(support)) if ecfg.signs == "random" else np.ones(len(support))
    theta = np.zeros(p)
    theta[support] = theta_min * signs
    if theta_min == 0 and len(support):
        raise ConfigInvalid("A zero signal magnitude leaves the support empty.")

    inst = ProblemInstance.build(X, theta, epsilon, s_star, sigma=ecfg.sigma)
    constants = DesignConstants(nu=nu, lambda_max=lambda_max, kappa=kappa, c=c, smallest_L=smallest_L,
                                L=L, D=D, theta_min=theta_min)
    return inst, constants


def generate_instance(ecfg, seed):
    return generate(ecfg, seed)[0]


def chain_config_for(ecfg, constants, T_hat, seed):
    return ChainConfig.auto(T_hat, ecfg.s_star, c=constants.c, L=constants.L, nu=constants.nu,
                            beta=ecfg.beta, D=constants.D, seed=seed)


def instance_payload(inst):
    return {"n": inst.n, "p": inst.p, "s_star": inst.s_star, "sigma": inst.sigma,
            "T": list(inst.T.indices), "theta": inst.theta.tolist(), "X": inst.X.tolist(),
            "Y": inst.Y.tolist(), "epsilon": inst.epsilon.tolist()}


class ExperimentRunner:
    """
    ExperimentRunner runs the pipeline stages of one seed and keeps everything they produce.

    Attributes:
        ecfg (ExperimentConfig): The experiment.
        seed (int): Seed of this run; all streams derive from it.
        stages (tuple): Stages requested, a prefix-closed subset of STAGES.
        report (DiagnosticsReport): Bound ledger and result sections.
        errors (dict): Stage name -> list of error strings.
        cap_hits (list): Stages skipped because a resource cap was exceeded.

    Methods:
        run(): Runs the requested stages in order.
        save(): Writes the report and tables under <output dir>/seed_<seed>/.
        delete(): Removes the files written by save().

    Notes:
        Bounds that hold unconditionally are enforced on every run. Bounds that are only
        guaranteed on the good event with verified assumptions are enforced when both hold
        and are recorded as information otherwise.
    """

    def __init__(self, ecfg, seed, stages=STAGES):
        self.ecfg = ecfg
        self.seed = seed
        self.stages = tuple(s for s in STAGES if s in stages)
        self.report = DiagnosticsReport(config_hash=ecfg.hash, seed=seed, version=f"ewachain {__version__}")
        self.errors = {stage: [] for stage in STAGES}
        self.cap_hits = []
        self._done = set()
        self.inst = self.constants = self.cfg = self.T_hat = None
        self.theta_hat = self.posterior = self.trace = self.table = self.chain = None
        self.events = self.assumptions = self.tree = self.loadings = self.curve = None

    @property
    def on_good_set(self):
        return bool(self.events is not None and self.events.H_n and self.assumptions.passed)

    def run(self):
        for stage in self.stages:
            missing = [dep for dep in DEPENDS[stage] if dep not in self._done]
            if missing:
                self.report.add(skipped(stage, f"skipped: {', '.join(missing)} unavailable"))
                continue
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    getattr(self, f"_stage_{stage}")()
                for w in caught:
                    self.report.sections.setdefault("warnings", []).append(f"[{stage}] {w.message}")
                self._done.add(stage)
            except ResourceCapExceeded as e:
                self.cap_hits.append(stage)
                self.report.add(skipped(stage, f"skipped: over cap ({e})"))
            except EwaChainError as e:
                self.errors[stage].append(str(e))
            except Exception as e:
                self.errors[stage].append(f"{type(e).__name__}: {e}")
        return self.report

    @property
    def status(self):
        """0 pass, 1 enforced failure or stage error, 3 when the requested target hit a cap."""
        if self.report.failures or any(self.errors.values()):
            return 1
        if self.stages and self.stages[-1] in self.cap_hits:
            return 3
        return 0

    def _stage_gen(self):
        self.inst, self.constants = generate(self.ecfg, self.seed)
        self.report.sections["constants"] = dataclasses.asdict(self.constants)

    def _stage_init(self):
        inst, ecfg = self.inst, self.ecfg
        lcfg = ecfg.lasso_config(self.constants.kappa)
        try:
            self.theta_hat = fit_lasso(inst, lcfg)
        except NoConvergence as e:
            self.errors["init"].append(str(e))
            self.theta_hat = e.best
        self.T_hat = threshold_support(self.theta_hat, lcfg, inst.p, inst.n)
        self.cfg = chain_config_for(ecfg, self.constants, self.T_hat, self.seed)
        self.posterior = Posterior(inst, self.cfg)
        summary = initializer_report(inst, lcfg, self.theta_hat, self.T_hat, self.cfg.c)
        self.report.sections["initializer"] = summary

        kkt_limit = 2 * inst.n * inst.p * lcfg.tol
        self.report.add(judged("lasso_kkt", "subgradient optimality of the lasso fit",
                               summary["kkt_residual"], kkt_limit, summary["kkt_residual"] <= kkt_limit))
        gap_limit = lcfg.tol * max(1.0, float(inst.Y @ inst.Y))
        gap = duality_gap(inst.X, inst.Y, self.theta_hat, lcfg.penalty(inst.p, inst.n))
        self.report.add(judged("lasso_duality_gap", "duality-gap certificate of the lasso fit",
                               gap, gap_limit, gap <= gap_limit))
        self.report.add(judged("lasso_l1_error", "l1 estimation bound 8 alpha lambda_n s*/kappa^2",
                               summary["delta_l1"], summary["delta_l1_bound"],
                               summary["delta_l1"] <= summary["delta_l1_bound"], enforced=False))
        self.report.add(judged("initializer_risk", "risk bound 2 alpha sqrt(Lambda_max s* log p)/kappa^2",
                               summary["risk"], summary["risk_bound"], summary["risk"] <= summary["risk_bound"],
                               enforced=False))

    def _stage_events(self):
        inst, cfg, cap = self.inst, self.cfg, self.ecfg.enumeration_cap
        self.events = check_events(inst, cfg, cap=cap)
        self.assumptions = check_assumptions(inst, cfg, cap=cap)
        ev, asm = self.events, self.assumptions
        self.report.sections["events"] = {"A_n": ev.A_n, "E_n": ev.E_n, "F_n": ev.F_n, "H_n": ev.H_n,
                                          "margins": ev.margins, "smallest_L": ev.smallest_L}
        self.report.sections["assumptions"] = dict(dataclasses.asdict(asm), passed=asm.passed)
        for name, margin in ev.margins.items():
            self.report.add(judged(f"event_{name}", "good-event quantity", margin["measured"], margin["threshold"],
                                   margin["measured"] <= margin["threshold"], enforced=False))
        self.report.add(judged("assumption_nu", "restricted eigenvalue floor over |S| <= 6 s*",
                               asm.nu_measured, asm.nu, asm.nu_holds, enforced=False))
        self.report.add(judged("assumption_signal", "min theta_j^2 >= 8 beta D log p/(n nu^2)",
                               asm.theta_min_sq, asm.theta_min_sq_threshold, asm.signal_holds, enforced=False))
        self.report.add(judged("assumption_D", "D >= 4 + (4L + 2c)/beta", asm.D, asm.D_minimum, asm.D_holds,
                               enforced=False))
        if inst.p <= 10:
            summary, errors = ProjectionLemmaCheck(inst.X, cfg.nu, 6 * inst.s_star, w=inst.Y,
                                                   cap=self.ecfg.enumeration_cap).data
            self.report.sections["projection_identities"] = dict(summary, errors=errors)
            self.report.add(judged("projection_identities", "projection gain identities and telescoping bound",
                                   len(errors), 0, not errors, enforced=asm.nu_holds))
        else:
            self.report.add(skipped("projection_identities", "skipped: p above 10"))

    def _stage_sample(self):
        self.trace = run_chain(self.inst, self.cfg, self.ecfg.steps, lazy=self.ecfg.lazy, posterior=self.posterior)
        accepts = self.trace.accepts[1:]
        self.report.sections["sampler"] = {
            "steps": self.ecfg.steps, "lazy": self.ecfg.lazy,
            "acceptance_rate": sum(accepts) / len(accepts) if accepts else 0.0,
            "final_state": self.trace.states[-1].hex(),
        }

    def _stage_oracle(self):
        inst, cfg = self.inst, self.cfg
        self.table = self.posterior.table(cap=self.ecfg.oracle_cap)
        self.chain = build_exact_chain(inst, cfg, cap=self.ecfg.oracle_cap, table=self.table)
        chain = self.chain
        gap = spectral_gap(chain)
        inverse_gap = exp_or_inf(log_inverse_gap(chain))
        self.report.sections["spectrum"] = {
            "gap": gap, "lazy_gap": spectral_gap(chain, lazy=True), "inverse_gap": inverse_gap,
            "second_largest_modulus": second_largest_modulus(chain),
            "lambda_2": float(chain.eigenvalues[1]), "lambda_N": float(chain.eigenvalues[-1]),
        }
        self.report.add(judged("detailed_balance", "reversibility of the Metropolis-Hastings kernel",
                               chain.detailed_balance_error(), 1e-12, chain.detailed_balance_error() <= 1e-12))
        self.report.add(judged("stationarity", "pi P = pi in l1", chain.stationarity_error(), 1e-10,
                               chain.stationarity_error() <= 1e-10))
        self.report.add(judged("row_sums", "rows of P sum to one", chain.row_sum_error(), 1e-12,
                               chain.row_sum_error() <= 1e-12))
        if chain.N <= 256:
            diff = float(np.max(np.abs(chain.nonsymmetric_eigenvalues() - chain.eigenvalues)))
            self.report.add(judged("symmetrized_spectrum", "symmetrized and direct eigenvalues agree",
                                   diff, 1e-8, diff <= 1e-8, enforced=False))
        bound = 60 * inst.p * inst.s_star
        self.report.add(judged("inverse_gap", "1/gap(P) <= 60 p s* on the good event", inverse_gap, bound,
                               inverse_gap <= bound, enforced=self.on_good_set))
        if self.trace is not None:
            tv = 0.5 * float(np.sum(np.abs(empirical_distribution(self.trace) - chain.pi)))
            self.report.add(judged("sampler_histogram_tv", "visit frequencies against exact pi", tv, 0.02,
                                   tv <= 0.02, enforced=False))

    def _stage_paths(self):
        inst, cfg, good = self.inst, self.cfg, self.on_good_set
        self.tree = build_tree(inst, cfg, cap=self.ecfg.oracle_cap)
        self.loadings = edge_loadings(inst, cfg, self.tree, table=self.table, cap=self.ecfg.loading_cap)
        log_inv_gap = log_inverse_gap(self.chain)
        log_sinclair = log_sinclair_bound(self.tree, self.loadings)
        self.report.add(judged("path_method", "1/gap(P) <= longest path * largest loading", exp_or_inf(log_inv_gap),
                               sinclair_bound(self.tree, self.loadings), log_inv_gap <= log_sinclair + 1e-9,
                               note=f"log side {log_inv_gap:.6g} vs {log_sinclair:.6g}"))
        outside = [load for load in self.loadings if not load.within_bound]
        self.report.add(judged("loading_vs_lambda", "edge loading <= pi(Lambda)(1 - pi(Lambda))/Q",
                               len(outside), 0, not outside))
        log_rho = max_log_loading(self.loadings)
        self.report.add(judged("max_loading", "largest loading <= 6p on the good event", exp_or_inf(log_rho), 6 * inst.p,
                               log_rho <= math.log(6 * inst.p), enforced=good))
        cases = path_length_cases(self.tree, inst, cfg)
        self.report.sections["path_lengths"] = cases
        self.report.add(judged("path_length", "canonical paths no longer than 2 + 8 s*", cases["diameter"]["value"],
                               cases["diameter"]["bound"], cases["diameter"]["holds"], enforced=good))
        for key in "abcd":
            self.report.add(judged(f"path_case_{key}", "depth bound per state class", cases[key].get("max_depth",
                                   cases[key].get("max_excess")), cases[key]["bound"], cases[key]["holds"],
                                   enforced=good))
        growth = hop_growth_check(self.tree, inst, cfg, table=self.table)
        self.report.add(judged("hop_growth", "pi grows by p^(D/2) along tree edges inside U",
                               growth["min_log_growth"], growth["required"], growth["holds"], enforced=good))
        for name, check in (("pi_gmap", PiGmapCheck), ("ratio", RatioLemmaCheck)):
            summary, errors = check(inst, cfg, self.tree, table=self.table).data
            self.report.sections[name] = dict(summary, errors=errors)
            self.report.add(judged(name, "state-wise pi ratio inequalities", len(errors), 0, not errors,
                                   enforced=good))

    def _stage_mixing(self):
        chain, cfg, ecfg, good = self.chain, self.cfg, self.ecfg, self.on_good_set
        start = cfg.T_hat
        self.curve = tv_decay(chain, start, ecfg.tv_steps)
        above = tv_bound_violations(chain, start, self.curve)
        self.report.add(judged("tv_bound", "lazy TV <= 1/2 pi(start)^(-1/2) exp(-k gap/2)", len(above), 0, not above))
        mix = mixing_time(chain, start, ecfg.eps, cfg)
        self.report.sections["mixing"] = dataclasses.asdict(mix)
        if mix.exact is None:
            self.report.add(skipped("mixing_exact", "skipped: TV step cap reached before eps"))
        else:
            self.report.add(judged("mixing_exact", "exact mixing time <= spectral bound", mix.exact,
                                   mix.analytic_steps, mix.exact_within_analytic))
            self.report.add(judged("mixing_theorem", "exact mixing time <= 120 p s* (log(1/2eps) + 2 D s* log p)",
                                   mix.exact, mix.theorem, mix.exact <= mix.theorem, enforced=good))
        self.report.add(judged("mixing_analytic", "spectral bound <= 120 p s* (log(1/2eps) + 2 D s* log p)",
                               mix.analytic, mix.theorem, mix.analytic_within_theorem, enforced=good))
        self.report.add(judged("inverse_pi_hat", "log(1/pi(T_hat)) normalizer bound", mix.log_inv_pi,
                               mix.log_inv_pi_bound, mix.log_inv_pi <= mix.log_inv_pi_bound + 1e-9, enforced=good))

    def seed_dir(self):
        return self.ecfg.output_dir() / f"seed_{self.seed}"

    def save(self):
        """Writes the report and every table this run produced; stale files are replaced."""
        out = self.seed_dir()
        if out.exists():
            shutil.rmtree(out)
        out.mkdir(parents=True)
        if self.inst is not None:
            write_json(out / "instance.json", instance_payload(self.inst))
        if self.trace is not None:
            write_trace_csv(out / "trace.csv", self.trace)
        if self.table is not None:
            write_golden_table(out / "golden_table.csv", self.table)
        if self.curve is not None:
            write_tv_csv(out / "tv_decay.csv", self.curve,
                         [log_tv_bound(self.chain, self.cfg.T_hat, k) for k, _ in self.curve])
        if self.tree is not None:
            write_dot(out / "gtree.dot", self.tree)
        if self.loadings is not None:
            write_loadings_csv(out / "loadings.csv", self.loadings)
        self.report.write_json(out / "report.json")

    def delete(self):
        out = self.seed_dir()
        if out.exists():
            shutil.rmtree(out)

    def summary(self):
        events = self.events
        return {
            "seed": self.seed,
            "status": self.status,
            "errors": {stage: errs for stage, errs in self.errors.items() if errs},
            "events": None if events is None else {"A_n": events.A_n, "E_n": events.E_n,
                                                   "F_n": events.F_n, "H_n": events.H_n},
            "failures": [entry.name for entry in self.report.failures],
        }


def run_seed(ecfg, seed, stages, save=True):
    runner = ExperimentRunner(ecfg, seed, stages)
    runner.run()
    if save:
        runner.save()
    return runner.summary()


def run_pipeline(ecfg, command="suite", save=True):
    """
    Runs `command` for every seed of the experiment. Returns (exit status, per-seed summaries).

    Per-seed files go to <output dir>/seed_<seed>/; pipeline_errors.txt and summary.json go to
    the output directory itself, and `suite` also writes event_frequencies.csv.
    """
    stages = COMMANDS[command]
    if ecfg.workers > 1 and len(ecfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=ecfg.workers) as pool:
            summaries = list(pool.map(run_seed, [ecfg] * len(ecfg.seeds), ecfg.seeds,
                                      [stages] * len(ecfg.seeds), [save] * len(ecfg.seeds)))
    else:
        summaries = [run_seed(ecfg, seed, stages, save=save) for seed in ecfg.seeds]

    statuses = [s["status"] for s in summaries]
    status = 1 if 1 in statuses else (3 if 3 in statuses else 0)
    if save:
        out = ecfg.output_dir()
        errors_by_stage = {stage: [f"seed {s['seed']}: {err}" for s in summaries for err in s["errors"].get(stage, [])]
                           for stage in stages}
        write_error_log(out / "pipeline_errors.txt", errors_by_stage)
        write_json(out / "summary.json", {"command": command, "config_hash": ecfg.hash, "status": status,
                                          "version": f"ewachain {__version__}", "seeds": summaries})
        if command == "suite":
            counts = {}
            runs = 0
            for s in summaries:
                if s["events"] is None:
                    continue
                runs += 1
                for name, holds in s["events"].items():
                    counts[name] = counts.get(name, 0) + int(holds)
            write_event_frequencies(out / "event_frequencies.csv", counts, runs, ecfg.n)
    return status, summaries
