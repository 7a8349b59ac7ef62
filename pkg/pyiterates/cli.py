"""
This module contains the class 'ExperimentRunner' that binds the estimators to
INI experiment configs and writes CSV/JSON result bundles, and the command-line
entry point `main`.
"""

import argparse
import configparser
import datetime
import hashlib
import logging
import os
import re
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .blocks import THM1, THM2, BlockEstimator, BlockScheme
from .coupling import Coupling
from .diagnostics import EXPONENTIAL, Diagnostics
from .errors import ConfigError, IterateError, MissingTableError, ValidationError
from .iterates import (
    DiscreteRenewalChain,
    IteratedFunctionSystem,
    MatrixWalk,
    RandomIterate,
    lyapunov_estimate,
    make_model,
)
from .models import (
    ARLipschitzSpec,
    DeltaTable,
    DiscreteRenewalSpec,
    ExperimentConfig,
    IFSSpec,
    InequalityCheck,
    MatrixWalkSpec,
    QuantileTable,
    ReportBundle,
    StickyBetaSpec,
    SurvivalTable,
)
from .models.specs import DEFAULT_BURN_IN, DEFAULT_TRUNCATION
from .oracles import RenewalOracle
from .quantile import CONDITIONS, QuantileCalculus
from .utils import Converter, create_logger, map_chunks
from .utils.tail import KINDS as EXTRAPOLATIONS


KINDS = ("simulate", "coupling", "meeting-time", "conditions", "blocks", "variance", "clt", "full-report")
FORMATS = ("csv", "json", "plot")

COMMANDS = {
    "simulate": "simulate",
    "coupling": "coupling",
    "meeting-time": "meeting-time",
    "conditions": "conditions",
    "blocks": "blocks",
    "variance": "variance",
    "clt": "clt",
    "report": "full-report",
}

REQUIRED = object()
QUANTILE_SAMPLES = 10_000


#############################
# FIELD PARSERS
def _int(text: str) -> int:
    return int(text.strip())


def _float(text: str) -> float:
    return float(text.strip())


def _str(text: str) -> str:
    return text.strip()


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value not in configparser.ConfigParser.BOOLEAN_STATES:
        raise ValueError(f"not a boolean: '{text}'")
    return configparser.ConfigParser.BOOLEAN_STATES[value]


def _list(item: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parse(text: str) -> List[Any]:
        return [item(part) for part in text.split(",") if part.strip()]

    return parse


def _optional(item: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str) -> Any:
        return None if text.strip() in ("", "none", "None") else item(text)

    return parse


def _matrices(text: str) -> List[List[List[float]]]:
    # matrices split by ';', rows by '|', entries by ','
    return [
        [[float(v) for v in row.split(",")] for row in matrix.split("|")]
        for matrix in text.split(";")
        if matrix.strip()
    ]


EXPERIMENT_FIELDS = {
    "kind": (_str, "full-report"),
    "seed": (_int, REQUIRED),
    "threads": (_int, 1),
    "label": (_str, ""),
}

MODEL_FIELDS = {
    DiscreteRenewalSpec.family: {
        "p_seq": (_optional(_list(_float)), None),
        "p": (_float, 3.0),
        "truncation": (_int, DEFAULT_TRUNCATION),
        "observable": (_str, "centered_indicator_zero"),
    },
    StickyBetaSpec.family: {
        "a": (_float, REQUIRED),
        "observable": (_str, "centered_state"),
    },
    ARLipschitzSpec.family: {
        "tau": (_float, REQUIRED),
        "C": (_float, 1.0),
        "innovation": (_str, "normal"),
        "scale": (_float, 1.0),
        "df": (_float, 5.0),
        "observable": (_str, "next_state"),
        "burn_in": (_int, DEFAULT_BURN_IN),
    },
    IFSSpec.family: {
        "rho": (_float, REQUIRED),
        "map_family": (_str, "interval"),
        "sigma": (_float, 1.0),
        "kappa": (_optional(_float), None),
        "observable": (_str, "identity"),
        "alpha": (_float, 0.5),
        "eta": (_float, 1.0),
        "burn_in": (_int, DEFAULT_BURN_IN),
    },
    MatrixWalkSpec.family: {
        "matrices": (_matrices, REQUIRED),
        "probabilities": (_optional(_list(_float)), None),
        "start_direction": (_optional(_list(_float)), None),
        "proximal": (_bool, False),
        "strongly_irreducible": (_bool, False),
        "burn_in": (_int, DEFAULT_BURN_IN),
    },
}

SPEC_TYPES = {
    DiscreteRenewalSpec.family: DiscreteRenewalSpec,
    StickyBetaSpec.family: StickyBetaSpec,
    ARLipschitzSpec.family: ARLipschitzSpec,
    IFSSpec.family: IFSSpec,
    MatrixWalkSpec.family: MatrixWalkSpec,
}

BUDGET_FIELDS = {
    "n_paths": (_int, 100_000),
    "reps": (_int, 2000),
    "cap": (_int, 256),
    "k_max": (_int, 50),
    "inner": (_int, 64),
    "outer": (_int, 20_000),
    "n": (_int, 5000),
    "path_length": (_int, 100_000),
    "chains": (_int, 8),
    "lag_window": (_optional(_int), None),
    "n_grid": (_list(_int), [10, 100, 1000]),
    "k_lo": (_int, 3),
    "k_hi": (_int, 8),
    "state_cap": (_optional(_int), None),
    "n_max": (_int, 50),
    "terms": (_int, 100_000),
}

CONDITION_FIELDS = {
    "p": (_float, 3.0),
    "r": (_optional(_float), None),
    "q": (_int, 2),
    "eps": (_float, 0.1),
    "scheme": (_str, THM1),
    "margin": (_float, 0.1),
    "extrapolation": (_str, "power"),
    "kinds": (_list(_str), ["C1", "C2", "C3", "C4"]),
}

INPUT_FIELDS = {
    "delta_table": (_str, ""),
    "delta_inf_table": (_str, ""),
    "survival_table": (_str, ""),
}

OUTPUT_FIELDS = {
    "directory": (_str, "results"),
    "formats": (_list(_str), ["csv", "json"]),
}

NEEDS_DELTA = ("C1", "C2", "C6")
NEEDS_SURVIVAL = ("C3", "C4", "C9")


class ExperimentRunner:
    """
    A class for running one experiment config end to end.

    Attributes:
        config (ExperimentConfig): The parsed config.
        config_hash (str): sha256 of the config file bytes.
        model (RandomIterate): The model built from the [model] section.
        logger (logging.Logger): The logger for class.

    Example usage:
    ```
    >>> config = ExperimentRunner.parse_config("meeting_time.ini")
    >>> runner = ExperimentRunner(config)
    >>> bundle = runner.run_experiment()
    >>> runner.emit(bundle)
    ```
    """

    logger: logging.Logger = create_logger(__name__)

    #############
    # CONSTRUCTOR
    def __init__(self, config: ExperimentConfig, config_hash: Optional[str] = None) -> None:
        """
        Initializes an ExperimentRunner object.

        Args:
            config (ExperimentConfig): The parsed config.
            config_hash (Optional[str]): sha256 of the config file; the hash of the
                echoed config when None.
        """
        self.config = config
        self.config_hash = config_hash or hashlib.sha256(config.to_ini().encode("utf-8")).hexdigest()
        self.model = make_model(self.build_spec(config.model))
        self._context: Dict[str, Any] = {}

    def __str__(self):
        return f"ExperimentRunner({self.config})"

    @classmethod
    def set_logger(cls, logger: logging.Logger) -> None:
        """
        Set logger for class.

        Args:
            logger (logging.Logger): Logger.
        """
        cls.logger = logger

    ################
    # CONFIGURATION
    @staticmethod
    def _section(
        parser: configparser.ConfigParser,
        section: str,
        fields: Dict[str, Any],
        skip: Sequence[str] = (),
    ) -> Dict[str, Any]:
        raw = dict(parser[section]) if parser.has_section(section) else {}
        for key in raw:
            if key not in fields and key not in skip:
                raise ConfigError(f"{section}.{key}", "unknown key")
        values: Dict[str, Any] = {}
        for key, (parse, default) in fields.items():
            if key not in raw:
                if default is REQUIRED:
                    raise ConfigError(f"{section}.{key}", f"{key} required")
                values[key] = list(default) if isinstance(default, list) else default
                continue
            try:
                values[key] = parse(raw[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{section}.{key}", f"invalid value '{raw[key]}': {e}") from e
        return values

    @staticmethod
    def build_spec(model: Dict[str, Any]):
        """
        Builds the model spec of a [model] section (including "family").
        """
        values = dict(model)
        family = values.pop("family")
        return SPEC_TYPES[family](**values)

    @staticmethod
    def _field_of(error: ValidationError, keys: Sequence[str]) -> str:
        tokens = re.findall(r"[A-Za-z_]+", f"{error.invariant or ''} {error}")
        for token in tokens:
            if token in keys:
                return f"model.{token}"
        return "model"

    @classmethod
    def parse_text(cls, text: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
        """
        Parses config text strictly and materializes every default.

        Args:
            text (str): INI text.
            overrides (Optional[Dict[str, str]]): Raw values keyed "section.key"
                applied before validation.

        Returns:
            ExperimentConfig: The config.

        Raises:
            ConfigError: Unknown section or key, missing seed, invalid value.
        """
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError("", f"malformed config: {e}") from e
        for dotted, value in (overrides or {}).items():
            section, key = dotted.split(".", 1)
            if not parser.has_section(section):
                parser.add_section(section)
            parser[section][key] = str(value)

        known = ("experiment", "model", "budgets", "conditions", "inputs", "output")
        for section in parser.sections():
            if section not in known:
                raise ConfigError(section, "unknown section")

        experiment = cls._section(parser, "experiment", EXPERIMENT_FIELDS)
        if experiment["kind"] not in KINDS:
            raise ConfigError("experiment.kind", f"unknown kind '{experiment['kind']}', expected one of {KINDS}")
        if not 0 <= experiment["seed"] < 2**64:
            raise ConfigError("experiment.seed", "seed must be an unsigned 64-bit integer")
        if experiment["threads"] < 1:
            raise ConfigError("experiment.threads", "threads must be >= 1")

        if not parser.has_section("model") or "family" not in parser["model"]:
            raise ConfigError("model.family", "family required")
        family = parser["model"]["family"].strip()
        if family not in MODEL_FIELDS:
            raise ConfigError("model.family", f"unknown family '{family}', expected one of {tuple(MODEL_FIELDS)}")
        fields = MODEL_FIELDS[family]
        model = cls._section(parser, "model", fields, skip=("family",))
        model = {"family": family, **model}
        try:
            spec = cls.build_spec(model)
            spec.validate()
        except ValidationError as e:
            raise ConfigError(cls._field_of(e, tuple(fields)), str(e)) from e
        model.update({key: getattr(spec, key) for key in fields})

        budgets = cls._section(parser, "budgets", BUDGET_FIELDS)
        for key, value in budgets.items():
            values = value if isinstance(value, list) else [value]
            if any(v is not None and v <= 0 for v in values) or not values:
                raise ConfigError(f"budgets.{key}", "budgets must be positive")
        if budgets["k_lo"] > budgets["k_hi"]:
            raise ConfigError("budgets.k_lo", "k_lo must not exceed k_hi")

        conditions = cls._section(parser, "conditions", CONDITION_FIELDS)
        if conditions["scheme"] not in (THM1, THM2):
            raise ConfigError("conditions.scheme", f"unknown scheme '{conditions['scheme']}'")
        if conditions["extrapolation"] not in EXTRAPOLATIONS:
            raise ConfigError("conditions.extrapolation", f"unknown extrapolation '{conditions['extrapolation']}'")
        if conditions["q"] not in (1, 2):
            raise ConfigError("conditions.q", "q must be 1 or 2")
        if conditions["p"] <= 2.0:
            raise ConfigError("conditions.p", "p must be > 2")
        if conditions["r"] is not None and conditions["r"] <= conditions["p"]:
            raise ConfigError("conditions.r", "r must be > p")
        unknown = [kind for kind in conditions["kinds"] if kind not in CONDITIONS]
        if unknown or not conditions["kinds"]:
            raise ConfigError("conditions.kinds", f"unknown condition ids {unknown}")

        inputs = cls._section(parser, "inputs", INPUT_FIELDS)
        output = cls._section(parser, "output", OUTPUT_FIELDS)
        bad = [name for name in output["formats"] if name not in FORMATS]
        if bad or not output["formats"]:
            raise ConfigError("output.formats", f"unknown formats {bad}, expected some of {FORMATS}")

        return ExperimentConfig(
            experiment["kind"],
            experiment["seed"],
            experiment["threads"],
            experiment["label"],
            model,
            budgets,
            conditions,
            inputs,
            output,
        )

    @classmethod
    def parse_config(cls, path: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
        """
        Reads and parses an experiment config file.

        Args:
            path (str): Path of the INI file.
            overrides (Optional[Dict[str, str]]): Raw values keyed "section.key".

        Returns:
            ExperimentConfig: The config.
        """
        try:
            with open(path, "r", encoding="utf-8") as file:
                text = file.read()
        except OSError as e:
            raise ConfigError("", f"cannot read config {path}: {e}") from e
        return cls.parse_text(text, overrides)

    @staticmethod
    def file_hash(path: str) -> str:
        with open(path, "rb") as file:
            return hashlib.sha256(file.read()).hexdigest()

    ##########
    # HELPERS
    def _step(self, bundle: ReportBundle, name: str, func: Callable[[], None]) -> bool:
        try:
            func()
            return True
        except Exception as e:
            self.logger.error(f"{name} failed: {e}")
            bundle.add_error(name, e)
            return False

    @property
    def _seed(self) -> int:
        return self.config.seed

    @property
    def _threads(self) -> int:
        return self.config.threads

    def _oracle(self) -> Optional[RenewalOracle]:
        if not isinstance(self.model, DiscreteRenewalChain):
            return None
        if "oracle" not in self._context:
            self._context["oracle"] = RenewalOracle(self.model.spec)
        return self._context["oracle"]

    def _quantile(self) -> QuantileTable:
        """
        Quantile table of |X_1| from stationary samples, built once per run.
        """
        if "quantile" not in self._context:
            model = self.model
            size = max(self.config.budgets["n_paths"], QUANTILE_SAMPLES)

            def run(count: int, rng: np.random.Generator) -> np.ndarray:
                states = model.sample_stationary(rng, count)
                return model.eval_observable(model.sample_innovations(rng, count), states)

            samples = np.concatenate(map_chunks(run, size, self._seed, "quantile", self._threads))
            self._context["quantile"] = QuantileCalculus.build_quantile(samples=samples)
        return self._context["quantile"]

    def _input_table(self, key: str, loader: Callable[[List[dict]], Any]) -> Optional[Any]:
        path = self.config.inputs.get(key) or ""
        if not path:
            return None
        try:
            return loader(Converter.read_csv(path))
        except OSError as e:
            raise IterateError(f"cannot read inputs.{key} {path}: {e}") from e

    def _delta(self) -> DeltaTable:
        table = self._context.get("delta")
        if table is None:
            table = self._input_table("delta_table", DeltaTable.from_rows)
        if table is None:
            raise MissingTableError("a delta table is required: run coupling first and set inputs.delta_table")
        if not table.envelope_applied or table.n[0] != 0:
            table = Coupling.delta_envelope(table)
        return table

    def _delta_inf(self) -> DeltaTable:
        table = self._context.get("delta_inf")
        if table is None:
            table = self._input_table("delta_inf_table", lambda rows: DeltaTable.from_rows(rows, flavor="Linf"))
        if table is None:
            raise MissingTableError("a delta_inf table is required: run coupling first and set inputs.delta_inf_table")
        return table

    def _survival(self) -> SurvivalTable:
        table = self._context.get("survival")
        if table is None:
            table = self._input_table("survival_table", SurvivalTable.from_rows)
        if table is None:
            oracle = self._oracle()
            if oracle is None:
                raise MissingTableError("a survival table is required: run meeting-time first and set inputs.survival_table")
            budgets = self.config.budgets
            table = oracle.pair_tail(budgets["cap"], budgets["state_cap"])
        return table

    ############
    # PIPELINES
    def _simulate(self, bundle: ReportBundle) -> None:
        path = Coupling(self.model, self._threads).simulate_coupled(self.config.budgets["n_max"], seed=self._seed)
        bundle.add_table("coupled_path", path)

    def _coupling(self, bundle: ReportBundle) -> None:
        budgets = self.config.budgets
        coupling = Coupling(self.model, self._threads)

        def pairwise() -> None:
            raw = coupling.estimate_pairwise_l1(budgets["k_max"], budgets["n_paths"], self._seed)
            bundle.add_table("pairwise_l1", raw)
            delta = coupling.delta_envelope(raw)
            self._context["delta"] = delta
            bundle.add_table("delta", delta)
            vanished = np.flatnonzero(raw.values <= 0)
            last = int(vanished[0]) if vanished.size else raw.values.size
            if last >= 4:
                fit = Diagnostics.decay_fit(raw.values[:last], raw.n[:last], EXPONENTIAL)
                bundle.add_report("pairwise_l1_decay", fit)

        def delta_inf() -> None:
            grid = np.unique(np.geomspace(1, budgets["k_max"], num=min(12, budgets["k_max"])).astype(int))
            table = coupling.estimate_delta_inf(grid, seed=self._seed)
            self._context["delta_inf"] = table
            bundle.add_table("delta_inf", table)
            if isinstance(self.model, IteratedFunctionSystem):
                bound = self.model.contraction_bound(table.n)
                check = InequalityCheck("delta_inf(n) <= eta c(kappa rho^(n-1)) + 3 se", table.n, table.values, bound + 3.0 * table.se)
                bundle.add_table("delta_inf_contraction", check)

        self._step(bundle, "coupling.pairwise_l1", pairwise)
        if isinstance(self.model, IteratedFunctionSystem) or "C10" in self.config.conditions["kinds"]:
            self._step(bundle, "coupling.delta_inf", delta_inf)
        if coupling.flags:
            bundle.manifest.setdefault("flags", []).extend(coupling.flags)

    def _meeting_time(self, bundle: ReportBundle) -> None:
        budgets = self.config.budgets
        coupling = Coupling(self.model, self._threads)
        cap = budgets["cap"]
        table = coupling.sample_meeting_times(cap, budgets["n_paths"], self._seed)
        self._context["survival"] = table
        bundle.add_table("survival", table)

        oracle = self._oracle()
        if oracle is None:

            def slope() -> None:
                bundle.add_report("tail_slope", Coupling.fit_tail_slope(table, window=(8, cap)))

            self._step(bundle, "meeting_time.tail_slope", slope)
            return

        def exact() -> None:
            n_max = min(budgets["n_max"], cap)
            tail = oracle.pair_tail(cap, budgets["state_cap"])
            bundle.add_table("survival_exact", tail)
            exact_values = tail.survival[: n_max + 1]
            binomial = np.sqrt(exact_values * (1.0 - exact_values) / budgets["n_paths"])
            gap = np.abs(table.survival[: n_max + 1] - exact_values)
            bundle.add_table(
                "survival_agreement",
                InequalityCheck("|P^(T* >= n) - P(T* >= n)| <= 3 se", np.arange(n_max + 1), gap, 3.0 * binomial),
            )
            bundle.add_table("tv_coupling_bound", oracle.tv_coupling_bound_check(n_max, budgets["state_cap"]))
            bundle.add_table("return_tail", oracle.return_tail(n_max))
            bundle.add_report(
                "renewal_oracle",
                {
                    "stationary": oracle.stationary()[: n_max + 1],
                    "regeneration_sigma2": oracle.regeneration_sigma2(),
                    "mean_eps": oracle.mean_eps,
                },
            )

        self._step(bundle, "meeting_time.oracle", exact)

    def _conditions(self, bundle: ReportBundle) -> None:
        conditions = self.config.conditions
        calculus = QuantileCalculus(conditions["margin"], self.config.budgets["terms"], conditions["extrapolation"])
        params = {"p": conditions["p"]}
        if conditions["r"] is not None:
            params["r"] = conditions["r"]
        spec = self.model.spec if isinstance(self.model, DiscreteRenewalChain) else None

        for kind in conditions["kinds"]:

            def evaluate(kind=kind) -> None:
                inputs: Dict[str, Any] = {"model": self.model, "spec": spec, "seed": self._seed}
                if kind in NEEDS_DELTA:
                    inputs["delta"] = self._delta()
                if kind in NEEDS_SURVIVAL:
                    inputs["survival"] = self._survival()
                if kind == "C10":
                    inputs["delta_inf"] = self._delta_inf()
                if kind in ("C1", "C2", "C3", "C6", "C7", "C12"):
                    inputs["quantile"] = self._quantile()
                bundle.add_report(kind, calculus.eval_series_condition(kind, params, **inputs))

            self._step(bundle, f"conditions.{kind}", evaluate)

    def _sigma2(self, diagnostics: Diagnostics):
        oracle = self._oracle()
        if oracle is not None:
            return oracle.regeneration_sigma2(), 0.0, "regeneration oracle"
        budgets = self.config.budgets
        value, se, window = diagnostics.sigma2_spectral(
            budgets["path_length"], budgets["chains"], budgets["lag_window"], self._seed
        )
        return value, se, f"spectral (window {window})"

    def _blocks(self, bundle: ReportBundle) -> None:
        budgets = self.config.budgets
        conditions = self.config.conditions
        p = conditions["p"]
        scheme = BlockScheme(conditions["margin"])
        if conditions["scheme"] == THM1:
            plan = scheme.plan_blocks_thm1(p, conditions["q"], conditions["eps"], budgets["k_lo"], budgets["k_hi"])
        else:
            quantile = self._quantile()
            calculus = QuantileCalculus(conditions["margin"], budgets["terms"], conditions["extrapolation"])
            gamma = calculus.gamma_tables(self._delta(), quantile)
            plan = scheme.plan_blocks_thm2(p, quantile, gamma, budgets["k_lo"], budgets["k_hi"])
        bundle.add_table("block_params", plan)

        def truncation() -> None:
            bundle.add_report("B1", scheme.eval_block_conditions("B1", p, plan, quantile=self._quantile()))

        self._step(bundle, "blocks.B1", truncation)

        estimator = BlockEstimator(self.model, self._threads)

        def nu_k() -> None:
            nu = estimator.estimate_nu_k(plan, budgets["outer"], budgets["inner"], self._seed)
            bundle.add_table("nu_k", nu)
            sigma2, sigma2_se, source = self._sigma2(Diagnostics(self.model, self._threads))
            bundle.add_report("sigma2", {"value": sigma2, "se": sigma2_se, "source": source})
            bundle.add_report("B2", scheme.eval_block_conditions("B2", p, plan, nu=nu, sigma2=sigma2, sigma2_se=sigma2_se))

        def tilde() -> None:
            k = int(plan.k[0])
            reps = max(2, budgets["outer"] // 2)
            for q in (1, 2):
                check = estimator.check_tilde_distance(k, plan, q, reps, budgets["inner"], self._seed)
                bundle.add_report(f"tilde_distance_q{q}", check)

        self._step(bundle, "blocks.nu_k", nu_k)
        self._step(bundle, "blocks.tilde_distance", tilde)

    def _variance(self, bundle: ReportBundle) -> None:
        budgets = self.config.budgets
        diagnostics = Diagnostics(self.model, self._threads)
        growth = diagnostics.variance_growth(
            budgets["n_grid"],
            budgets["reps"],
            self._seed,
            spectral_length=budgets["path_length"],
            chains=budgets["chains"],
            lag_window=budgets["lag_window"],
        )
        bundle.add_table("variance_growth", growth)
        summary = {
            "sigma2_growth": growth.sigma2_growth,
            "sigma2_growth_se": growth.sigma2_growth_se,
            "sigma2_spectral": growth.sigma2_spectral,
            "sigma2_spectral_se": growth.sigma2_spectral_se,
            "lag_window": growth.lag_window,
        }
        oracle = self._oracle()
        if oracle is not None:
            summary["sigma2_oracle"] = oracle.regeneration_sigma2()
        bundle.add_report("variance", summary)

    def _clt(self, bundle: ReportBundle) -> None:
        budgets = self.config.budgets
        report = Diagnostics(self.model, self._threads).clt_check(budgets["n"], budgets["reps"], self._seed)
        bundle.add_report("clt", report)

    def _lyapunov(self, bundle: ReportBundle) -> None:
        budgets = self.config.budgets
        bundle.add_report("lyapunov", lyapunov_estimate(self.model, budgets["n"], budgets["reps"], self._seed, self._threads))

    def _full_report(self, bundle: ReportBundle) -> None:
        self._step(bundle, "coupling", lambda: self._coupling(bundle))
        if not isinstance(self.model, MatrixWalk):
            self._step(bundle, "meeting-time", lambda: self._meeting_time(bundle))
        else:
            self._step(bundle, "lyapunov", lambda: self._lyapunov(bundle))
        self._step(bundle, "conditions", lambda: self._conditions(bundle))
        self._step(bundle, "blocks", lambda: self._blocks(bundle))
        self._step(bundle, "variance", lambda: self._variance(bundle))
        self._step(bundle, "clt", lambda: self._clt(bundle))

    ############
    # RUN / EMIT
    def run_experiment(self) -> ReportBundle:
        """
        Runs the pipeline of the configured kind.

        Failures of individual steps are logged and collected in the bundle; the
        remaining steps still run.

        Returns:
            ReportBundle: Tables, reports, verdicts and the manifest.
        """
        from . import __version__

        config = self.config
        started = time.perf_counter()
        manifest: Dict[str, Any] = {
            "config_sha256": self.config_hash,
            "version": __version__,
            "kind": config.kind,
            "seed": config.seed,
            "label": config.label,
            "model": str(self.model.spec),
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        }
        bundle = ReportBundle(manifest, config)
        self._context = {}
        pipelines = {
            "simulate": self._simulate,
            "coupling": self._coupling,
            "meeting-time": self._meeting_time,
            "conditions": self._conditions,
            "blocks": self._blocks,
            "variance": self._variance,
            "clt": self._clt,
            "full-report": self._full_report,
        }
        self.logger.info(f"Running {config}")
        self._step(bundle, config.kind, lambda: pipelines[config.kind](bundle))
        manifest["wall_time_s"] = round(time.perf_counter() - started, 3)
        self.logger.info(f"{bundle} in {manifest['wall_time_s']} s")
        return bundle

    def emit(
        self,
        bundle: ReportBundle,
        formats: Optional[Sequence[str]] = None,
        directory: Optional[str] = None,
    ) -> List[str]:
        """
        Writes a bundle: CSV tables, JSON reports, an optional long plot CSV, the
        echoed config and manifest.json.

        Args:
            bundle (ReportBundle): The bundle.
            formats (Optional[Sequence[str]]): Some of "csv", "json", "plot"; the config's when None.
            directory (Optional[str]): Output directory; the config's when None.

        Returns:
            List[str]: Paths written.
        """
        return emit(bundle, formats or self.config.output["formats"], directory or self.config.output["directory"])


##################
# MODULE FUNCTIONS
def parse_config(path: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    return ExperimentRunner.parse_config(path, overrides)


def run_experiment(config: ExperimentConfig, config_hash: Optional[str] = None) -> ReportBundle:
    return ExperimentRunner(config, config_hash).run_experiment()


def emit(bundle: ReportBundle, formats: Sequence[str] = ("csv", "json"), directory: str = "results") -> List[str]:
    """
    Writes the files of a bundle into `directory`.

    Tables go to <name>.csv, reports to <name>.json (stable key order), the plot
    format to plot.csv with columns series, x, y, se. manifest.json is always
    written; config.ini echoes the materialized config when the bundle has one.

    Raises:
        IterateError: A file cannot be written; the message names the path.
    """
    written: List[str] = []

    def write(name: str, writer: Callable[[str], None]) -> None:
        path = os.path.join(directory, name)
        try:
            writer(path)
        except OSError as e:
            raise IterateError(f"cannot write {path}: {e}") from e
        written.append(path)

    def text(content: str) -> Callable[[str], None]:
        def writer(path: str) -> None:
            with open(path, "w", encoding="utf-8", newline="\n") as file:
                file.write(content)

        return writer

    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise IterateError(f"cannot create {directory}: {e}") from e

    if "csv" in formats:
        for name in sorted(bundle.tables):
            header, rows = Converter.table_to_rows(bundle.tables[name])
            write(f"{name}.csv", lambda path, header=header, rows=rows: Converter.write_csv(path, header, rows))
    if "json" in formats:
        for name in sorted(bundle.reports):
            write(f"{name}.json", text(Converter.to_json(bundle.reports[name])))
    if "plot" in formats and bundle.tables:
        rows = []
        for name in sorted(bundle.tables):
            rows.extend(Converter.table_to_long(name, bundle.tables[name]))
        write("plot.csv", lambda path: Converter.write_csv(path, ["series", "x", "y", "se"], rows))
    if bundle.config is not None:
        write("config.ini", text(bundle.config.to_ini()))
    write("manifest.json", text(Converter.to_json(bundle.to_dict())))
    return written


#####
# CLI
def _configure_logging(log_file: bool, quiet: bool) -> None:
    level = logging.WARNING if quiet else logging.INFO
    for owner in (ExperimentRunner, Coupling, RenewalOracle, QuantileCalculus, BlockScheme, BlockEstimator, Diagnostics, RandomIterate):
        owner.set_logger(create_logger(owner.__module__, console=True, file=log_file, level=level))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (INI)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", help="output directory, overrides the config")
    common.add_argument("--threads", type=int, help="worker threads, overrides the config")
    common.add_argument("--format", help="comma-separated output formats: csv,json,plot")
    common.add_argument("--log-file", action="store_true", help="write warnings to logs/")
    common.add_argument("--quiet", action="store_true", help="console output at WARNING level")

    parser = argparse.ArgumentParser(prog="pyiterates", description="Simulation and verification of stationary random iterates.")
    commands = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        commands.add_parser(command, parents=[common], help=f"run the {COMMANDS[command]} experiment")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Command-line entry point.

    Returns:
        int: 0 on success, 2 on validation errors, 1 on runtime errors.
    """
    args = build_parser().parse_args(argv)
    _configure_logging(args.log_file, args.quiet)

    overrides = {"experiment.kind": COMMANDS[args.command]}
    if args.seed is not None:
        overrides["experiment.seed"] = str(args.seed)
    if args.threads is not None:
        overrides["experiment.threads"] = str(args.threads)
    if args.out is not None:
        overrides["output.directory"] = args.out
    if args.format is not None:
        overrides["output.formats"] = args.format

    try:
        config = ExperimentRunner.parse_config(args.config, overrides)
        runner = ExperimentRunner(config, ExperimentRunner.file_hash(args.config))
        bundle = runner.run_experiment()
        runner.emit(bundle)
    except ValidationError as e:
        ExperimentRunner.logger.error(str(e))
        return 2
    except (IterateError, OSError) as e:
        ExperimentRunner.logger.error(str(e))
        return 1
    for error in bundle.errors:
        ExperimentRunner.logger.error(error)
    return bundle.exit_status


if __name__ == "__main__":
    sys.exit(main())
