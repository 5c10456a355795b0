"""Run configuration for the command-line front end."""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .flow import CIRCULATION_MIN_R, CIRCULATION_TOL, JP_TOL
from .hamiltonian import DEFAULT_N_MAX, N_MAX_RANGE
from .spectrum import BREAK_DISTANCE, DRIFT_THRESHOLD, PAIR_TOL, RESIDUAL_TOL, TOL_REAL
from .wigner import MIN_NODES, PhaseGrid

Command = Literal["spectrum-sweep", "ep-find", "wigner-grid", "flow-field", "circulation-sweep", "validate"]
OutputFormat = Literal["csv", "json", "xlsx"]

SINGLE_EPS_COMMANDS = {"wigner-grid", "flow-field"}
EPS_DECIMALS = 12


class EpsRange(BaseModel):
    """start:stop:step, inclusive of stop up to float rounding; values never pass stop."""

    model_config = ConfigDict(frozen=True)

    start: float
    stop: float
    step: float = 1.0

    @model_validator(mode="after")
    def _check(self) -> EpsRange:
        if self.start <= 0:
            raise ValueError(f"eps must be > 0, got start={self.start}")
        if self.step <= 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if self.stop < self.start:
            raise ValueError(f"empty eps range {self.start}:{self.stop}")
        return self

    @classmethod
    def parse(cls, text: str) -> EpsRange:
        parts = [float(p) for p in str(text).split(":")]
        if len(parts) == 1:
            return cls(start=parts[0], stop=parts[0])
        if len(parts) == 3:
            return cls(start=parts[0], stop=parts[1], step=parts[2])
        raise ValueError(f"eps must be 'value' or 'start:stop:step', got {text!r}")

    def values(self) -> list[float]:
        count = math.floor((self.stop - self.start) / self.step + 0.5) + 1
        # Never step past stop; the half-step rounding only absorbs float error.
        while count > 1 and self.start + (count - 1) * self.step > self.stop + 1e-12:
            count -= 1
        return [round(self.start + k * self.step, EPS_DECIMALS) for k in range(count)]


class GridSpec(BaseModel):
    """x_min:x_max:n_x[,p_min:p_max:n_p]; a single block is used for both axes."""

    model_config = ConfigDict(frozen=True)

    x_min: float = -5.0
    x_max: float = 5.0
    n_x: int = 201
    p_min: float = -5.0
    p_max: float = 5.0
    n_p: int = 201

    @model_validator(mode="after")
    def _check(self) -> GridSpec:
        for name, n in (("n_x", self.n_x), ("n_p", self.n_p)):
            if n < MIN_NODES or n % 2 == 0:
                raise ValueError(f"{name}={n}: node counts must be odd and >= {MIN_NODES}")
        if self.x_max <= self.x_min or self.p_max <= self.p_min:
            raise ValueError("grid bounds must be ascending")
        return self

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        blocks = str(text).split(",")
        axes = []
        for block in blocks:
            lo, hi, n = block.split(":")
            axes.append((float(lo), float(hi), int(n)))
        if len(axes) == 1:
            axes.append(axes[0])
        if len(axes) != 2:
            raise ValueError(f"grid must be 'lo:hi:n' or 'lo:hi:n,lo:hi:n', got {text!r}")
        (x_lo, x_hi, nx), (p_lo, p_hi, np_) = axes
        return cls(x_min=x_lo, x_max=x_hi, n_x=nx, p_min=p_lo, p_max=p_hi, n_p=np_)

    def to_grid(self) -> PhaseGrid:
        return PhaseGrid(self.x_min, self.x_max, self.p_min, self.p_max, self.n_x, self.n_p)


def _parse_pair(value, cast):
    if isinstance(value, str):
        parts = value.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected two comma-separated values, got {value!r}")
        return tuple(cast(p) for p in parts)
    return value


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Command
    eps: EpsRange | None = None
    n_max: int = DEFAULT_N_MAX
    state_index: int = 1
    grid: GridSpec = GridSpec()
    branches: tuple[int, int] = (1, 2)
    bracket: tuple[float, float] = (1.40, 1.45)
    tol: float = 1e-5
    output: Path | None = None
    format: OutputFormat = "csv"
    include_dwdt: bool = False
    levels: int | None = None
    r_init: float = CIRCULATION_MIN_R
    workers: int | None = None

    @field_validator("eps", mode="before")
    @classmethod
    def _parse_eps(cls, value):
        if isinstance(value, (str, int, float)):
            return EpsRange.parse(str(value))
        return value

    @field_validator("grid", mode="before")
    @classmethod
    def _parse_grid(cls, value):
        if isinstance(value, str):
            return GridSpec.parse(value)
        return value

    @field_validator("branches", mode="before")
    @classmethod
    def _parse_branches(cls, value):
        return _parse_pair(value, int)

    @field_validator("bracket", mode="before")
    @classmethod
    def _parse_bracket(cls, value):
        return _parse_pair(value, float)

    @field_validator("n_max")
    @classmethod
    def _check_n_max(cls, value: int) -> int:
        lo, hi = N_MAX_RANGE
        if not lo <= value <= hi:
            raise ValueError(f"n_max must lie in [{lo}, {hi}], got {value}")
        return value

    @field_validator("levels", "workers")
    @classmethod
    def _check_positive(cls, value: int | None) -> int | None:
        if value is not None and value < 1:
            raise ValueError(f"must be >= 1, got {value}")
        return value

    @model_validator(mode="after")
    def _check_command(self) -> RunConfig:
        a, b = self.branches
        if not 0 <= a < b < self.n_max:
            raise ValueError(f"branches {self.branches} must be ascending levels below n_max={self.n_max}")
        if not self.bracket[0] < self.bracket[1] or self.bracket[0] <= 0:
            raise ValueError(f"bracket must be ascending and positive, got {self.bracket}")
        if not 0 <= self.state_index < self.n_max:
            raise ValueError(f"state_index {self.state_index} outside [0, {self.n_max})")
        if self.r_init < CIRCULATION_MIN_R:
            raise ValueError(f"r_init must be >= {CIRCULATION_MIN_R}")
        needs_eps = self.command in SINGLE_EPS_COMMANDS | {"spectrum-sweep", "circulation-sweep"}
        if needs_eps and self.eps is None:
            raise ValueError(f"{self.command} needs --eps")
        if self.command in SINGLE_EPS_COMMANDS and self.eps is not None and len(self.eps.values()) != 1:
            raise ValueError(f"{self.command} takes a single eps value")
        return self

    @classmethod
    def from_env(cls, **fields) -> RunConfig:
        """Build from explicit fields, filling workers from PTWIGNER_WORKERS when not given."""
        if fields.get("workers") is None:
            env = os.environ.get("PTWIGNER_WORKERS", "")
            if env:
                fields["workers"] = int(env)
        return cls(**fields)

    def output_path(self) -> Path:
        """Explicit output, else '<command>.<format>'; relative paths resolve under PTWIGNER_OUTPUT_DIR."""
        path = self.output or Path(f"{self.command}.{self.format}")
        base = os.environ.get("PTWIGNER_OUTPUT_DIR", "")
        if base and not path.is_absolute():
            path = Path(base) / path
        return path

    def echo(self) -> dict:
        """Configuration and numerical tolerances embedded in every output."""
        config = self.model_dump(mode="json", exclude={"output", "workers"})
        config["eps_values"] = self.eps.values() if self.eps is not None else None
        return {
            "config": config,
            "tolerances": {
                "tol_real": TOL_REAL,
                "pair_tol": PAIR_TOL,
                "residual_tol": RESIDUAL_TOL,
                "break_distance": BREAK_DISTANCE,
                "drift_threshold": DRIFT_THRESHOLD,
                "jp_tol": JP_TOL,
                "circulation_tol": CIRCULATION_TOL,
            },
        }
