"""
Camera Data Models

Pinhole intrinsics and the spherical chart used on the Gaussian sphere.
"""

import hashlib
import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FocalSource(str, Enum):
    """Where the focal length of a run came from."""

    PROVIDED = "provided"
    DEFAULT = "default"


class CameraIntrinsics(BaseModel):
    """
    Pinhole camera intrinsics.

    Pixel (x, y) addresses the continuous image plane with the top-left corner at (0, 0);
    the center of pixel column c, row r sits at (c + 0.5, r + 0.5).
    """

    model_config = ConfigDict(frozen=True)

    focal: float = Field(..., gt=0.0, description="Focal length in pixels")
    cx: float = Field(..., description="Principal point x in pixels")
    cy: float = Field(..., description="Principal point y in pixels")
    width: int = Field(..., gt=0, description="Image width in pixels")
    height: int = Field(..., gt=0, description="Image height in pixels")

    @model_validator(mode="after")
    def validate_principal_point(self) -> "CameraIntrinsics":
        """Ensure the principal point lies inside the image."""
        if not 0.0 <= self.cx <= self.width:
            raise ValueError(f"cx={self.cx} outside [0, {self.width}]")
        if not 0.0 <= self.cy <= self.height:
            raise ValueError(f"cy={self.cy} outside [0, {self.height}]")
        return self

    @property
    def principal_point(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    @property
    def image_size(self) -> tuple[int, int]:
        return (self.width, self.height)

    @classmethod
    def from_record(
        cls,
        width: int,
        height: int,
        focal: Optional[float] = None,
        cx: Optional[float] = None,
        cy: Optional[float] = None,
        default_focal: Optional[float] = None,
    ) -> tuple["CameraIntrinsics", FocalSource]:
        """
        Build intrinsics from a manifest-style record.

        The principal point defaults to the image center. A missing focal length falls back
        to `default_focal`, or max(width, height) when that is unset too, and the result is
        flagged as uncalibrated.

        Args:
            width: Image width in pixels
            height: Image height in pixels
            focal: Focal length in pixels, if known
            cx: Principal point x, if known
            cy: Principal point y, if known
            default_focal: Fallback focal length

        Returns:
            Tuple of (intrinsics, focal source)
        """
        source = FocalSource.PROVIDED
        if focal is None:
            focal = default_focal if default_focal is not None else float(max(width, height))
            source = FocalSource.DEFAULT
        return (
            cls(
                focal=focal,
                cx=width / 2.0 if cx is None else cx,
                cy=height / 2.0 if cy is None else cy,
                width=width,
                height=height,
            ),
            source,
        )

    def rescaled(
        self,
        scale: float,
        offset_x: float = 0.0,
        offset_y: float = 0.0,
        width: Optional[int] = None,
        height: Optional[int] = None,
    ) -> "CameraIntrinsics":
        """
        Intrinsics of the image after a uniform resize and a translation.

        Args:
            scale: Resize factor applied to pixel coordinates
            offset_x: Horizontal padding added after resizing
            offset_y: Vertical padding added after resizing
            width: Width of the resulting image (defaults to the scaled width)
            height: Height of the resulting image (defaults to the scaled height)

        Returns:
            Rescaled intrinsics
        """
        return CameraIntrinsics(
            focal=self.focal * scale,
            cx=self.cx * scale + offset_x,
            cy=self.cy * scale + offset_y,
            width=width if width is not None else max(1, round(self.width * scale)),
            height=height if height is not None else max(1, round(self.height * scale)),
        )

    def content_hash(self) -> int:
        """64-bit content hash used to key mapping caches."""
        text = "|".join(
            f"{v:.12g}" for v in (self.focal, self.cx, self.cy, float(self.width), float(self.height))
        )
        return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


class CameraDefaults(BaseModel):
    """Run-level camera policy."""

    default_focal: Optional[float] = Field(
        default=None, gt=0.0, description="Focal used when an image has none (max(W, H) if unset)"
    )


class SphericalCoord(BaseModel):
    """Azimuth/elevation chart: alpha from the z-axis in the xz plane, beta toward +y."""

    model_config = ConfigDict(frozen=True)

    azimuth: float = Field(..., ge=-math.pi / 2, lt=math.pi, description="Alpha in radians")
    elevation: float = Field(..., ge=-math.pi / 2, le=math.pi / 2, description="Beta in radians")
