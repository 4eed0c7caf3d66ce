"""Trajectory- vs video-based labeling of manipulation movements at different speeds.

Pipeline: synthetic recordings (:mod:`synthgen`) -> kinematics and
segmentation -> labeling -> fixed-size features -> KNN / random forest /
gradient boosting -> speed-transfer evaluation (:mod:`evaluation`).
"""

__version__ = "0.1.0"
