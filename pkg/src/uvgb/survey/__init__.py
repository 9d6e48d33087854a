"""Georeferencing, deduplication, counting and the synthetic field simulator."""
from .count import SurveyReport, assign_rows, survey_count, write_survey_report
from .dedup import dedup_clusters, dedup_points
from .georef import (
    FramePose,
    GeoPoint,
    TangentPlane,
    ground_to_pixel,
    pixel_to_ground,
    read_poses_csv,
    write_points_csv,
    write_poses_csv,
)
from .simulate import FieldSpec, FlightSpec, SimulatedSurvey, simulate_survey

__all__ = [
    "FieldSpec",
    "FlightSpec",
    "FramePose",
    "GeoPoint",
    "SimulatedSurvey",
    "SurveyReport",
    "TangentPlane",
    "assign_rows",
    "dedup_clusters",
    "dedup_points",
    "ground_to_pixel",
    "pixel_to_ground",
    "read_poses_csv",
    "simulate_survey",
    "survey_count",
    "write_points_csv",
    "write_poses_csv",
    "write_survey_report",
]
