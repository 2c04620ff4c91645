"""Evaluation report files.

An evaluation writes one CSV per table (`<table>.csv`) plus `summary.txt`
(`key=value` lines, sorted by key). `consolidate` renders every table of a
directory into one plain-text document.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import pandas as pd

from rmpc.errors import ReportRefusedError
from rmpc.utils import get_pylogger

log = get_pylogger(__name__)

SUMMARY_FILE = "summary.txt"
REPORT_FILE = "report.txt"
FLOAT_FORMAT = "%.10g"
# tables listed first, in this order; sweeps and the rest follow by name
TABLE_ORDER = ("policy_error", "horizon_cost", "tracking_error", "anytime", "timing")


def _format(value) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


@dataclass
class EvalReport:
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: Dict[str, object] = field(default_factory=dict)

    def add_table(self, name: str, df: pd.DataFrame) -> None:
        self.tables[name] = df

    def write(self, directory: Union[str, Path]) -> List[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in sorted(self.tables):
            path = directory / f"{name}.csv"
            self.tables[name].to_csv(path, index=False, float_format=FLOAT_FORMAT)
            paths.append(path)
        path = directory / SUMMARY_FILE
        path.write_text("".join(f"{k}={_format(self.summary[k])}\n" for k in sorted(self.summary)),
                        encoding="utf-8")
        paths.append(path)
        log.info(f"Wrote evaluation report <dir={directory}, tables={len(self.tables)}>")
        return paths


def read_summary(path: Union[str, Path]) -> Dict[str, str]:
    entries = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            entries[key] = value
    return entries


def _table_sort_key(path: Path):
    stem = path.stem
    if stem in TABLE_ORDER:
        return 0, TABLE_ORDER.index(stem), stem
    if stem.startswith("sweep_"):
        return 1, 0, stem
    return 2, 0, stem


def consolidate(directory: Union[str, Path]) -> Tuple[str, List[str]]:
    """Plain-text document of every CSV table in `directory` and the unreadable files.

    Tables come in a fixed order, sweep tables sorted by parameter name. The
    document is also written to `report.txt`.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ReportRefusedError(f"report directory not found <{directory}>")
    csvs = sorted(directory.glob("*.csv"), key=_table_sort_key)
    summary_path = directory / SUMMARY_FILE
    if not csvs and not summary_path.is_file():
        raise ReportRefusedError(f"no evaluation outputs in <{directory}>")

    sections, errors = [], []
    if summary_path.is_file():
        summary = read_summary(summary_path)
        lines = [f"  {k} = {v}" for k, v in summary.items()]
        sections.append("\n".join(["[summary]", *lines]))
    for path in csvs:
        try:
            df = pd.read_csv(path)
            if df.columns.empty:
                raise ValueError("no columns")
        except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as ex:
            errors.append(f"{path.name}: {str(ex).splitlines()[0] if str(ex) else type(ex).__name__}")
            continue
        title = path.stem
        if title.startswith("sweep_"):
            title = f"sweep: {title[len('sweep_'):]}"
        body = df.to_string(index=False, float_format=lambda v: FLOAT_FORMAT % v) if len(df) else "(no rows)"
        sections.append(f"[{title}]\n{body}")
    if errors:
        sections.append("\n".join(["[errors]", *[f"  {e}" for e in errors]]))

    text = "\n\n".join(sections) + "\n"
    (directory / REPORT_FILE).write_text(text, encoding="utf-8")
    return text, errors
