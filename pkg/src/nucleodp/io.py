"""JSON instances and reports. Rationals are always strings ``"p/q"`` or ``"p"``."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .games.bmatching import BMatchingGame
from .games.decomposition import TreeDecomposition
from .games.voting import VotingGame
from .nucleolus import CooperativeGame, NucleolusResult
from .ratmath import format_rational, parse_rational


class InstanceError(ValueError):
    pass


def _int(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(f"{what} must be an integer, got {value!r}")
    return value


def _list(value: Any, what: str) -> list:
    if not isinstance(value, list):
        raise InstanceError(f"{what} must be a list")
    return value


def game_from_dict(data: Any, width_budget: int | None = None) -> CooperativeGame:
    if not isinstance(data, dict):
        raise InstanceError("instance must be a JSON object")
    kind = data.get("type")
    try:
        if kind == "weighted_voting":
            weights = [_int(w, "weight") for w in _list(data.get("weights"), "weights")]
            T = _int(data.get("threshold"), "threshold")
            return VotingGame(tuple(weights), T)
        if kind == "b_matching":
            n = _int(data.get("n"), "n")
            edges = []
            for item in _list(data.get("edges"), "edges"):
                if not isinstance(item, list) or len(item) != 3:
                    raise InstanceError(f"edge must be [u, v, \"w\"], got {item!r}")
                u, v, w = item
                try:
                    wq = parse_rational(w)
                except ValueError as exc:
                    raise InstanceError(str(exc)) from exc
                edges.append((_int(u, "edge endpoint"), _int(v, "edge endpoint"), wq))
            b = [_int(x, "degree cap") for x in _list(data.get("b"), "b")]
            td = None
            if data.get("tree_decomposition") is not None:
                raw = data["tree_decomposition"]
                if not isinstance(raw, dict):
                    raise InstanceError("tree_decomposition must be an object")
                bags = [[_int(v, "bag vertex") for v in _list(bag, "bag")]
                        for bag in _list(raw.get("bags"), "bags")]
                tedges = [[_int(x, "tree edge") for x in _list(e, "tree edge")]
                          for e in _list(raw.get("edges", []), "tree edges")]
                if any(len(e) != 2 for e in tedges):
                    raise InstanceError("tree edges must be pairs")
                td = TreeDecomposition.build(bags, tedges, _int(raw.get("root", 0), "root"))
            return BMatchingGame(n, tuple(edges), tuple(b), td, width_budget=width_budget)
    except InstanceError:
        raise
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc
    raise InstanceError(f"unknown game type: {kind!r}")


def load_instance(path: str | Path, width_budget: int | None = None) -> CooperativeGame:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from exc
    return game_from_dict(data, width_budget)


def parse_allocation(text: str, n: int) -> tuple[Fraction, ...]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed allocation JSON: {exc.msg}") from exc
    if not isinstance(raw, list) or len(raw) != n:
        raise InstanceError(f"allocation must be a list of {n} rationals")
    try:
        return tuple(parse_rational(v) for v in raw)
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc


def rationals(values) -> list[str]:
    return [format_rational(v) for v in values]


def members(coalition) -> list[int]:
    return [i for i, s in enumerate(coalition) if s]


def nucleolus_report(result: NucleolusResult, timing: bool = False) -> dict:
    report = {
        "allocation": rationals(result.allocation),
        "epsilons": rationals(result.epsilons),
        "fixed_coalitions": [
            {"coalition": members(it.fixed), "value": format_rational(it.constant)}
            for it in result.iterations
        ],
        "stats": {
            "iterations": len(result.iterations),
            "cuts": result.total_cuts,
            "oracle_calls": result.oracle_calls,
            "candidates_tested": [it.candidates_tested for it in result.iterations],
        },
    }
    if timing:
        report["stats"]["seconds"] = round(result.seconds, 6)
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)
