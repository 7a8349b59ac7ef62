"""
This module contains the experiment records.
"""

import configparser
import io
from typing import Any, Dict, List, Optional

from ..errors import ValidationError
from ..utils.converter import Converter


class ExperimentConfig:
    """
    A class that represents a parsed experiment config with every default materialized.

    Attributes:
        kind (str): Experiment kind.
        seed (int): Master seed.
        threads (int): Worker threads.
        label (str): Free-form label.
        model (Dict[str, Any]): Model section, including "family".
        budgets (Dict[str, Any]): Budget section.
        conditions (Dict[str, Any]): Condition section.
        inputs (Dict[str, Any]): Input tables section.
        output (Dict[str, Any]): Output section.
    """

    kind: str
    seed: int
    threads: int
    label: str
    model: Dict[str, Any]
    budgets: Dict[str, Any]
    conditions: Dict[str, Any]
    inputs: Dict[str, Any]
    output: Dict[str, Any]

    def __init__(
        self,
        kind: str,
        seed: int,
        threads: int,
        label: str,
        model: Dict[str, Any],
        budgets: Dict[str, Any],
        conditions: Dict[str, Any],
        inputs: Dict[str, Any],
        output: Dict[str, Any],
    ) -> None:
        self.kind = kind
        self.seed = seed
        self.threads = threads
        self.label = label
        self.model = model
        self.budgets = budgets
        self.conditions = conditions
        self.inputs = inputs
        self.output = output

    def __str__(self):
        return f"ExperimentConfig({self.kind}, {self.model.get('family')}, seed={self.seed})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    def sections(self) -> Dict[str, Dict[str, Any]]:
        return {
            "experiment": {
                "kind": self.kind,
                "seed": self.seed,
                "threads": self.threads,
                "label": self.label,
            },
            "model": self.model,
            "budgets": self.budgets,
            "conditions": self.conditions,
            "inputs": self.inputs,
            "output": self.output,
        }

    def to_ini(self) -> str:
        """
        Writes the config back as INI text; parsing it gives an equal config.
        """
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for section, values in self.sections().items():
            parser[section] = {
                key: Converter.value_to_ini(value)
                for key, value in values.items()
                if value is not None
            }
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    def to_dict(self) -> dict:
        return self.__dict__


class ReportBundle:
    """
    A class that represents the results of one experiment run.

    Attributes:
        manifest (Dict[str, Any]): Config hash, toolkit version, wall time and settings.
        config (ExperimentConfig): The materialized config.
        tables (Dict[str, Any]): Tabular artifacts by name.
        reports (Dict[str, Any]): JSON artifacts by name.
        verdicts (Dict[str, str]): Verdict summary by condition id.
        errors (List[str]): Failures collected while running.
        invalid (bool): Whether one of the failures was a validation error.
    """

    manifest: Dict[str, Any]
    config: Optional[ExperimentConfig]
    tables: Dict[str, Any]
    reports: Dict[str, Any]
    verdicts: Dict[str, str]
    errors: List[str]
    invalid: bool

    def __init__(self, manifest: Dict[str, Any], config: Optional[ExperimentConfig] = None) -> None:
        self.manifest = manifest
        self.config = config
        self.tables = {}
        self.reports = {}
        self.verdicts = {}
        self.errors = []
        self.invalid = False

    def __str__(self):
        return f"ReportBundle({len(self.tables)} tables, {len(self.reports)} reports, {len(self.errors)} errors)"

    @property
    def exit_status(self) -> int:
        if not self.errors:
            return 0
        return 2 if self.invalid else 1

    def add_table(self, name: str, table: Any) -> None:
        self.tables[name] = table

    def add_report(self, name: str, report: Any) -> None:
        self.reports[name] = report
        verdict = getattr(report, "verdict", None)
        if verdict is not None:
            self.verdicts[getattr(report, "condition_id", name)] = verdict

    def add_error(self, step: str, error: Exception) -> None:
        self.errors.append(f"{step}: {type(error).__name__}: {error}")
        if isinstance(error, ValidationError):
            self.invalid = True

    def to_dict(self) -> dict:
        return {
            "manifest": self.manifest,
            "verdicts": self.verdicts,
            "errors": self.errors,
            "tables": sorted(self.tables),
            "reports": sorted(self.reports),
        }
