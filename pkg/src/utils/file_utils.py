"""
Output writers for the PD-MPC flood-control engine: trace CSV, summary sidecar,
comparison table and sweep grids, plus the configuration hash.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from .exceptions import OutputError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TRACE_COLUMNS = (
    ["step", "inflow", "forecast0", "total", "spill", "turb", "storage", "level", "penalty_total"]
    + [f"j{i}" for i in range(1, 9)]
    + ["w1", "w2", "w3i", "w3d", "w4i", "w4d", "w5", "sh_level", "lp_status", "fallback"]
    + ["ga_generations", "ga_evaluations", "ga_best_penalty"]
)

PathLike = Union[str, Path]


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 over the canonical JSON form of a configuration."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _header_line(config_hash_value: str, seed: Optional[int] = None) -> str:
    line = f"# config_hash={config_hash_value}"
    if seed is not None:
        line += f" seed={seed}"
    return line + "\n"


class FileUtils:
    """Utility class for output files."""

    @staticmethod
    def ensure_directory(path: PathLike) -> Path:
        """
        Ensure a directory exists, create if it doesn't.

        Args:
            path: Directory path

        Returns:
            The directory as a Path
        """
        path = Path(path)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Failed to create directory {path}: {e}")
            raise OutputError(f"cannot create directory {path}: {e}") from e
        return path

    @staticmethod
    def write_frame(frame: pd.DataFrame, file_path: PathLike, comment: str, index: bool = False) -> Path:
        """Write a CSV preceded by a single '#' comment line."""
        file_path = Path(file_path)
        try:
            FileUtils.ensure_directory(file_path.parent)
            with open(file_path, "w", encoding="utf-8", newline="") as f:
                f.write(comment)
                frame.to_csv(f, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            logger.error(f"Failed to write {file_path}: {e}")
            raise OutputError(f"cannot write {file_path}: {e}") from e
        return file_path

    @staticmethod
    def save_json(data: Any, file_path: PathLike, indent: int = 2) -> Path:
        """
        Save data to a JSON file with sorted keys.

        Args:
            data: Data to save
            file_path: Path to the JSON file
            indent: JSON indentation

        Returns:
            Path written
        """
        file_path = Path(file_path)
        try:
            FileUtils.ensure_directory(file_path.parent)
            with open(file_path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=indent, sort_keys=True, default=str, ensure_ascii=False)
                f.write("\n")
        except OSError as e:
            logger.error(f"Failed to save JSON data to {file_path}: {e}")
            raise OutputError(f"cannot write {file_path}: {e}") from e
        logger.debug(f"JSON data saved successfully: {file_path}")
        return file_path

    @staticmethod
    def trace_frame(trace) -> pd.DataFrame:
        """One row per trace step with the trace CSV columns."""
        rows = []
        for s in trace.steps:
            rows.append(
                [s.step, s.inflow, float(s.forecast[0]), s.total, s.spill, s.turb, s.storage, s.level,
                 s.report.total]
                + list(s.report.terms)
                + list(s.genes)
                + [s.sh_level, s.lp_status, "|".join(s.fallback)]
                + [s.ga_generations, s.ga_evaluations, s.ga_best_penalty]
            )
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)

    @staticmethod
    def write_trace(trace, metrics, path: PathLike, config: Dict[str, Any], config_hash_value: str) -> Path:
        """
        Write the per-step trace CSV and its summary sidecar.

        Args:
            trace: Completed run
            metrics: Metrics of the run
            path: Trace CSV path; the sidecar goes next to it as <stem>.summary.json
            config: Fully resolved configuration
            config_hash_value: Hash of the configuration

        Returns:
            Path of the trace CSV
        """
        path = Path(path)
        FileUtils.write_frame(FileUtils.trace_frame(trace), path, _header_line(config_hash_value, trace.seed))
        FileUtils.save_json(
            {
                "config_hash": config_hash_value,
                "seed": trace.seed,
                "event": trace.event_name,
                "mode": trace.mode.value,
                "horizon": trace.horizon,
                "steps": len(trace),
                "flagged_steps": trace.flagged_steps,
                "violations": trace.violations.summary(),
                "metrics": metrics.to_dict(),
                "config": config,
            },
            sidecar_path(path),
        )
        logger.info(f"💾 Trace written to {path}")
        return path

    @staticmethod
    def write_comparison(table, path: PathLike, config_hash_value: str) -> Path:
        path = FileUtils.write_frame(table.to_frame(), path, _header_line(config_hash_value))
        logger.info(f"💾 Comparison table ({len(table)} rows) written to {path}")
        return path

    @staticmethod
    def write_sweep(result, grid_path: PathLike, long_path: PathLike, config_hash_value: str, seed: int):
        """Write the display grid (gene value x step) and the long-form raw penalties."""
        header = _header_line(config_hash_value, seed)
        grid = pd.DataFrame(
            result.display_grid(),
            index=pd.Index(result.values, name=result.gene),
            columns=[f"k{k}" for k in result.steps],
        )
        FileUtils.write_frame(grid, grid_path, header, index=True)
        FileUtils.write_frame(result.long_frame(), long_path, header)
        logger.info(f"💾 Sweep grid {grid.shape[0]}x{grid.shape[1]} written to {grid_path}")
        return Path(grid_path), Path(long_path)


def sidecar_path(trace_path: PathLike) -> Path:
    trace_path = Path(trace_path)
    return trace_path.with_name(trace_path.stem + ".summary.json")


# Global file utils instance
file_utils = FileUtils()
