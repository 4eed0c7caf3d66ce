"""Closed vocabularies shared by every stage: movement classes, speeds, provenance."""
from enum import Enum, IntEnum


class LabelClass(IntEnum):
    middle2front = 0
    front2middle = 1
    middle2left = 2
    left2middle = 3
    middle2right = 4
    right2middle = 5
    middle2down = 6
    down2middle = 7

    @classmethod
    def reach(cls, position: str) -> "LabelClass":
        return cls[f"middle2{position}"]

    @classmethod
    def carry(cls, position: str) -> "LabelClass":
        return cls[f"{position}2middle"]


N_CLASSES = len(LabelClass)


class SpeedClass(str, Enum):
    slow = "slow"
    normal = "normal"
    fast = "fast"


PROVENANCES = ("truth", "trajectory", "video")
