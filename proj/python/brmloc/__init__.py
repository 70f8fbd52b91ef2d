"""Building-ratio-map UAV localization: python bindings over the C++ core."""

from ._core import (
    BrmError,
    BuildingRaster,
    GeoTransform,
    Matcher,
    Phase,
    RatioMap,
    extract_feature,
    generate_ratio_map,
    rasterize_geojson,
    run_experiment,
    synth_city_geojson,
)

__all__ = [
    "BrmError",
    "BuildingRaster",
    "GeoTransform",
    "Matcher",
    "Phase",
    "RatioMap",
    "extract_feature",
    "generate_ratio_map",
    "rasterize_geojson",
    "run_experiment",
    "synth_city_geojson",
]
