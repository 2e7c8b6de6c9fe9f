use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical shape before translation. Rectangles and disks are centred at
/// the origin; triangles and polygons use their vertices as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Rectangle { a: f64, b: f64 },
    Disk { r: f64 },
    Triangle { vertices: [[f64; 2]; 3] },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionGeometry {
    #[serde(flatten)]
    pub shape: Shape,
    /// Translation relative to the rotation axis.
    #[serde(default)]
    pub offset: [f64; 2],
}

impl SectionGeometry {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            offset: [0.0, 0.0],
        }
    }

    pub fn with_offset(mut self, offset: [f64; 2]) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.offset.iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry("non-finite offset".into()));
        }
        match &self.shape {
            Shape::Rectangle { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::Geometry(format!("rectangle sides {a} x {b}")));
                }
            }
            Shape::Disk { r } => {
                if !(r.is_finite() && *r > 0.0) {
                    return Err(Error::Geometry(format!("disk radius {r}")));
                }
            }
            Shape::Triangle { vertices } => check_polygon(vertices)?,
            Shape::Polygon { vertices } => check_polygon(vertices)?,
        }
        Ok(())
    }

    /// Exact area of the continuous shape.
    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Rectangle { a, b } => a * b,
            Shape::Disk { r } => std::f64::consts::PI * r * r,
            Shape::Triangle { vertices } => signed_area(vertices).abs(),
            Shape::Polygon { vertices } => signed_area(vertices).abs(),
        }
    }

    /// Smallest width of the bounding box (the diameter for a disk).
    pub fn min_extent(&self) -> f64 {
        match &self.shape {
            Shape::Rectangle { a, b } => a.min(*b),
            Shape::Disk { r } => 2.0 * r,
            Shape::Triangle { vertices } => bbox_min_side(vertices),
            Shape::Polygon { vertices } => bbox_min_side(vertices),
        }
    }
}

pub(crate) fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

fn bbox_min_side(v: &[[f64; 2]]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in v {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (hi[0] - lo[0]).min(hi[1] - lo[1])
}

fn check_polygon(v: &[[f64; 2]]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::Geometry(format!("polygon with {n} vertices")));
    }
    if v.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Geometry("non-finite vertex".into()));
    }
    let scale = v
        .iter()
        .flatten()
        .map(|c| c.abs())
        .fold(1e-300, f64::max);
    for i in 0..n {
        for j in i + 1..n {
            if dist(v[i], v[j]) <= 1e-12 * scale {
                return Err(Error::Geometry(format!("repeated vertex {i} and {j}")));
            }
        }
    }
    let area = signed_area(v).abs();
    if area <= 1e-12 * scale * scale {
        return Err(Error::Geometry("zero area".into()));
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if !adjacent && segments_intersect(a, b, c, d) {
                return Err(Error::Geometry(format!(
                    "boundary self-intersects at edges {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

pub(crate) fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: [f64; 2], q: [f64; 2], r: [f64; 2], c: f64| {
        c == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// Named geometries used throughout the test suite.
pub mod presets {
    use super::{SectionGeometry, Shape};

    pub fn rectangle() -> SectionGeometry {
        SectionGeometry::new(Shape::Rectangle { a: 1.0, b: 0.7 })
    }

    pub fn disk() -> SectionGeometry {
        SectionGeometry::new(Shape::Disk { r: 1.0 })
    }

    pub fn scalene_triangle() -> SectionGeometry {
        SectionGeometry::new(Shape::Triangle {
            vertices: [[0.0, 0.0], [1.3, 0.0], [0.4, 0.9]],
        })
    }

    pub fn l_shape() -> SectionGeometry {
        SectionGeometry::new(Shape::Polygon {
            vertices: vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 0.5],
                [0.5, 0.5],
                [0.5, 1.0],
                [0.0, 1.0],
            ],
        })
    }

    pub fn by_name(name: &str) -> Option<SectionGeometry> {
        match name {
            "rectangle" => Some(rectangle()),
            "disk" => Some(disk()),
            "triangle" => Some(scalene_triangle()),
            "l-shape" | "lshape" => Some(l_shape()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let g: SectionGeometry =
            serde_json::from_str(r#"{"kind":"rectangle","a":1.0,"b":0.7,"offset":[0.0,0.0]}"#)
                .unwrap();
        assert_eq!(g, presets::rectangle());
        let g: SectionGeometry = serde_json::from_str(r#"{"kind":"disk","r":2.0}"#).unwrap();
        assert_eq!(g.offset, [0.0, 0.0]);
        let s = serde_json::to_string(&presets::scalene_triangle()).unwrap();
        let back: SectionGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, presets::scalene_triangle());
    }

    #[test]
    fn rejects_bad_polygons() {
        let bowtie = SectionGeometry::new(Shape::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        });
        assert!(bowtie.validate().is_err());
        let flat = SectionGeometry::new(Shape::Triangle {
            vertices: [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        });
        assert!(flat.validate().is_err());
        let repeated = SectionGeometry::new(Shape::Triangle {
            vertices: [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]],
        });
        assert!(repeated.validate().is_err());
        assert!(presets::l_shape().validate().is_ok());
    }

    #[test]
    fn shoelace_area() {
        assert!((presets::scalene_triangle().area() - 0.585).abs() < 1e-15);
        assert!((presets::l_shape().area() - 0.75).abs() < 1e-15);
    }
}
