"""Multi-phase coronary artery segmentation toolkit.

Vessel-group routing over the 25 SYNTAX segment classes, COCO-style polygon
ingestion and rasterization, ensemble probability fusion with LCA
refinement, the challenge's exact mean-F1 metric, deterministic synthetic
datasets, and a batch pipeline driver.  See README.md for the CLI tour.
"""

__version__ = "0.1.0"

from .taxonomy import (  # noqa: F401
    CLASSES,
    LCA_CLASSES,
    RCA_CLASSES,
    SegmentClass,
    SubGroup,
    VesselGroup,
    class_from_name,
    group_of_labels,
    subgroup_of_labels,
    vessel_group,
)
