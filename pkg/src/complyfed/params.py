"""Flat 64-bit parameter vectors with a named tensor layout.

A ParamVector is the unit of client/server exchange: a 1-D float64 array plus
an ordered (name, shape) layout describing how it decomposes into tensors.
All arithmetic is elementwise and layout-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Layout = tuple[tuple[str, tuple[int, ...]], ...]


class LayoutMismatchError(ValueError):
    pass


def layout_size(layout: Layout) -> int:
    return int(sum(int(np.prod(shape)) for _, shape in layout))


@dataclass(frozen=True)
class ParamVector:
    values: np.ndarray
    layout: Layout

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("ParamVector values must be 1-D")
        if values.size != layout_size(self.layout):
            raise LayoutMismatchError(
                f"layout describes {layout_size(self.layout)} values, got {values.size}"
            )
        object.__setattr__(self, "values", values)

    def check_same_layout(self, other: "ParamVector") -> None:
        if self.layout != other.layout:
            raise LayoutMismatchError(
                f"layouts differ: {self.layout} vs {other.layout}"
            )

    def tensors(self) -> dict[str, np.ndarray]:
        """Views of the flat vector reshaped per the layout (read-only)."""
        out = {}
        offset = 0
        for name, shape in self.layout:
            size = int(np.prod(shape))
            view = self.values[offset : offset + size].reshape(shape)
            view.flags.writeable = False
            out[name] = view
            offset += size
        return out

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.layout)

    def __add__(self, other: "ParamVector") -> "ParamVector":
        self.check_same_layout(other)
        return ParamVector(self.values + other.values, self.layout)

    def __sub__(self, other: "ParamVector") -> "ParamVector":
        self.check_same_layout(other)
        return ParamVector(self.values - other.values, self.layout)

    def scale(self, k: float) -> "ParamVector":
        return ParamVector(self.values * float(k), self.layout)

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def zeros_like(self) -> "ParamVector":
        return ParamVector(np.zeros_like(self.values), self.layout)

    def allclose(self, other: "ParamVector", atol: float = 0.0, rtol: float = 0.0) -> bool:
        self.check_same_layout(other)
        return bool(np.allclose(self.values, other.values, atol=atol, rtol=rtol))
