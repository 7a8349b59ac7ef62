"""
This module contains the Converter class.
"""

import csv
import json
import math
from typing import Any, Dict, List, Tuple

import numpy as np


Rows = Tuple[List[str], List[List[Any]]]


class Converter:
    """
    A class that converts tables and reports to CSV rows, JSON text and INI values.
    """

    @staticmethod
    def jsonable(obj: Any) -> Any:
        """
        Converts an object tree to plain JSON types.

        Objects with `to_dict` are expanded, numpy values become Python values and
        non-finite floats become the strings "inf", "-inf" and "nan".
        """
        if hasattr(obj, "to_dict"):
            return Converter.jsonable(obj.to_dict())
        if isinstance(obj, dict):
            return {str(key): Converter.jsonable(value) for key, value in obj.items()}
        if isinstance(obj, np.ndarray):
            return Converter.jsonable(obj.tolist())
        if isinstance(obj, (list, tuple)):
            return [Converter.jsonable(value) for value in obj]
        if isinstance(obj, np.generic):
            return Converter.jsonable(obj.item())
        if isinstance(obj, float) and not math.isfinite(obj):
            return str(obj)
        return obj

    @staticmethod
    def to_json(obj: Any) -> str:
        """
        Serializes an object tree with a stable key order.
        """
        return json.dumps(Converter.jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @staticmethod
    def value_to_ini(value: Any) -> str:
        """
        Formats a typed config value the way the config parser reads it back.
        """
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        if isinstance(value, (list, tuple)):
            if value and isinstance(value[0], (list, tuple)):
                # matrices: rows split by '|', matrices split by ';'
                return "; ".join(
                    " | ".join(", ".join(repr(float(v)) for v in row) for row in matrix)
                    for matrix in value
                )
            return ", ".join(Converter.value_to_ini(v) for v in value)
        return str(value)

    @staticmethod
    def table_to_rows(table: Any) -> Rows:
        """
        Converts a table to a CSV header and rows.

        Args:
            table: A SurvivalTable, DeltaTable, NuTable, BlockParams, VarianceGrowth,
                CoupledPath or InequalityCheck.

        Returns:
            Rows: The header and the rows.
        """
        kind = type(table).__name__
        if kind == "SurvivalTable":
            header = ["n", "survival", "se", "count"]
            columns = [table.n, table.survival, table.se, table.count]
        elif kind == "DeltaTable":
            header = ["n", "value", "se", "count"]
            count = table.count if table.count is not None else np.zeros(table.n.size, dtype=int)
            columns = [table.n, table.values, table.se, count]
        elif kind == "NuTable":
            header = ["k", "nu", "se", "nu_cov", "se_cov", "m_k", "M_k"]
            columns = [table.k, table.nu, table.se, table.nu_cov, table.se_cov, table.m, table.M]
        elif kind == "BlockParams":
            header = ["k", "M_k", "m_k", "v_k"]
            v = table.v if table.v is not None else np.full(table.k.size, np.nan)
            columns = [table.k, table.M, table.m, v]
        elif kind == "VarianceGrowth":
            header = ["n", "value", "se"]
            columns = [table.n, table.values, table.se]
        elif kind == "InequalityCheck":
            header = ["n", "lhs", "rhs"]
            columns = [table.n, table.lhs, table.rhs]
        elif kind == "CoupledPath":
            header = ["k", "W", "W_star", "X", "X_star"]
            k = np.arange(table.n + 1)
            x = np.concatenate([[np.nan], table.observables])
            x_star = np.concatenate([[np.nan], table.observables_star])
            columns = [k, Converter._states(table.states), Converter._states(table.states_star), x, x_star]
        else:
            raise TypeError(f"no CSV layout for {kind}")
        rows = [[Converter._cell(value) for value in row] for row in zip(*columns)]
        return header, rows

    @staticmethod
    def table_to_long(name: str, table: Any) -> List[List[Any]]:
        """
        Converts a table to long-format plot rows (series, x, y, se).
        """
        kind = type(table).__name__
        if kind == "SurvivalTable":
            triples = zip(table.n, table.survival, table.se)
        elif kind in ("DeltaTable", "VarianceGrowth"):
            triples = zip(table.n, table.values, table.se)
        elif kind == "NuTable":
            triples = zip(table.k, table.nu, table.se)
        else:
            return []
        return [[name, Converter._cell(x), Converter._cell(y), Converter._cell(se)] for x, y, se in triples]

    @staticmethod
    def write_csv(path: str, header: List[str], rows: List[List[Any]]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)

    @staticmethod
    def read_csv(path: str) -> List[Dict[str, str]]:
        with open(path, "r", encoding="utf-8", newline="") as file:
            return list(csv.DictReader(file))

    @staticmethod
    def _states(states: np.ndarray) -> List[Any]:
        if states.ndim == 1:
            return list(states)
        return [";".join(repr(float(v)) for v in row) for row in states]

    @staticmethod
    def _cell(value: Any) -> Any:
        if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
            return int(value)
        if isinstance(value, (np.floating, float)):
            value = float(value)
            return repr(value) if math.isfinite(value) else ""
        return value
