// SPDX-License-Identifier: Apache-2.0

//! Integer-nanometre geometry kernel.

mod clip;
mod distance;
mod path;
mod point;
mod polygon;
mod rtree;
mod trapezoid;
mod width;

pub use clip::{
    interiors_intersect, intersection_area, rect_intersection_area, shifted_overlap_areas, Pieces, AREA_EPSILON,
};
pub use distance::{boundary_distance_sq, min_spacing, point_segment_sq, segment_segment_sq, Spacing, SqDist};
pub use path::{circle, path_to_polygon, path_to_polygon_with, EndCap, PathError, CIRCLE_SEGMENTS};
pub use point::{orientation, Point, Rect};
pub use polygon::{find_self_intersection, normalize_ring, segments_intersect, signed_area2, Location, Polygon, PolygonError};
pub use rtree::{SpatialIndex, DEFAULT_FANOUT};
pub use trapezoid::{decompose_real, decompose_rects, decompose_trapezoids, sweep_cut_count, RealTrapezoid, Trapezoid};
pub use width::min_width;
