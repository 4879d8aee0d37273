"""JSON interchange for defining sets, trades and swap lists."""
from __future__ import annotations

import json
import re
from pathlib import Path

from .errors import TradeError
from .trades import DefiningSets, Trade


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _read_json(path: str | Path):
    try:
        text = Path(path).read_text() if str(path) != "-" else __import__("sys").stdin.read()
        return json.loads(text)
    except OSError as exc:
        raise TradeError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise TradeError(f"{path} is not valid JSON: {exc}") from exc


def load_sets(path: str | Path) -> DefiningSets:
    return DefiningSets.from_dict(_read_json(path))


def load_trade(path: str | Path) -> Trade:
    return Trade.from_dict(_read_json(path))


def parse_swaps(text: str) -> list[tuple[int, int]]:
    """Parse ``"1,2;4,5"``, ``"(1,2),(4,5)"`` or ``"[[1,2],[4,5]]"`` into pairs."""
    nums = [int(x) for x in re.findall(r"-?\d+", text)]
    if len(nums) % 2:
        raise TradeError(f"odd number of labels in swap list {text!r}")
    return [(nums[i], nums[i + 1]) for i in range(0, len(nums), 2)]
