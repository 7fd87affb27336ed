//! Center and data-site generators: Halton, jittered ("epsilon") grid and
//! regular grid, each mapped affinely onto a rectangle.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain2 {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain2 {
    pub const UNIT: Domain2 = Domain2 {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let all_finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !all_finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::Domain(format!(
                "invalid rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Domain2 {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Maps unit-square coordinates onto the rectangle.
    #[inline]
    pub fn map_unit(&self, u: f64, v: f64) -> Point2 {
        Point2::new(
            self.x_min + u * self.width(),
            self.y_min + v * self.height(),
        )
    }

    /// Inverse of [`Domain2::map_unit`].
    #[inline]
    pub fn to_unit(&self, p: &Point2) -> (f64, f64) {
        (
            (p.x - self.x_min) / self.width(),
            (p.y - self.y_min) / self.height(),
        )
    }
}

impl fmt::Display for Domain2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.x_min, self.x_max, self.y_min, self.y_max
        )
    }
}

/// Parses `xmin,xmax,ymin,ymax`.
impl FromStr for Domain2 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(format!("domain `{s}`: {e}")))?;
        match parts[..] {
            [x0, x1, y0, y1] => Domain2::new(x0, x1, y0, y1),
            _ => Err(Error::Domain(format!(
                "domain `{s}` must have four comma-separated values"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Halton,
    Epsilon,
    #[serde(rename = "grid")]
    RegularGrid,
    External,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Halton => "halton",
            Provenance::Epsilon => "epsilon",
            Provenance::RegularGrid => "grid",
            Provenance::External => "external",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<Point2>,
    pub provenance: Provenance,
}

impl PointSet {
    /// Wraps externally supplied points, checking they are finite.
    pub fn external(points: Vec<Point2>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                what: "point set",
                row: i,
                col: 0,
            });
        }
        Ok(PointSet {
            points,
            provenance: Provenance::External,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point2> {
        self.points.iter()
    }

    /// Writes the points as CSV with header `x,y`.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("x,y\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", fmt_f64(p.x), fmt_f64(p.y)));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a CSV with header `x,y`. Extra columns are ignored.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table = crate::fields::parse_csv_columns(&text, &["x", "y"])?;
        let points = table
            .into_iter()
            .map(|row| Point2::new(row[0], row[1]))
            .collect();
        PointSet::external(points)
    }
}

/// 17 significant digits, the width every CSV in this crate uses.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    // digit-reversed integer over base^digits, divided once so the result is
    // correctly rounded while both fit in 53 bits
    let (mut num, mut den) = (0u64, 1u64);
    while index > 0 && den <= (1u64 << 53) / base {
        num = num * base + index % base;
        den *= base;
        index /= base;
    }
    let mut value = num as f64 / den as f64;
    let mut scale = 1.0 / den as f64;
    while index > 0 {
        scale /= base as f64;
        value += (index % base) as f64 * scale;
        index /= base;
    }
    value
}

/// `n` Halton points in bases (2, 3), starting at sequence index `start_index`.
pub fn halton_points(n: usize, start_index: u64, domain: &Domain2) -> Result<PointSet> {
    if start_index < 1 {
        return Err(Error::Domain(
            "halton start index must be >= 1 (index 0 is the corner point)".into(),
        ));
    }
    let points = (0..n as u64)
        .map(|k| {
            let i = start_index + k;
            domain.map_unit(radical_inverse(i, 2), radical_inverse(i, 3))
        })
        .collect();
    Ok(PointSet {
        points,
        provenance: Provenance::Halton,
    })
}

fn grid_nodes(nx: usize, ny: usize, domain: &Domain2) -> Result<Vec<Point2>> {
    if nx < 2 || ny < 2 {
        return Err(Error::Domain(format!(
            "grid needs at least 2 nodes per axis, got {nx} x {ny}"
        )));
    }
    let mut points = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let v = j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let u = i as f64 / (nx - 1) as f64;
            points.push(domain.map_unit(u, v));
        }
    }
    Ok(points)
}

/// `nx × ny` tensor grid including the corners, row-major (y outer, x inner).
pub fn regular_grid(nx: usize, ny: usize, domain: &Domain2) -> Result<PointSet> {
    Ok(PointSet {
        points: grid_nodes(nx, ny, domain)?,
        provenance: Provenance::RegularGrid,
    })
}

/// Regular grid with each coordinate displaced uniformly by up to
/// `jitter_fraction / 2` of the grid spacing, then clamped to the domain.
///
/// The generator is ChaCha8 seeded from `seed`; for every node the x offset
/// is drawn before the y offset, nodes in grid order.
pub fn epsilon_points(
    nx: usize,
    ny: usize,
    jitter_fraction: f64,
    seed: u64,
    domain: &Domain2,
) -> Result<PointSet> {
    if !(0.0..=1.0).contains(&jitter_fraction) {
        return Err(Error::Domain(format!(
            "jitter fraction must lie in [0, 1], got {jitter_fraction}"
        )));
    }
    let mut points = grid_nodes(nx, ny, domain)?;
    let half_x = 0.5 * jitter_fraction * domain.width() / (nx - 1) as f64;
    let half_y = 0.5 * jitter_fraction * domain.height() / (ny - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in &mut points {
        let dx: f64 = rng.random_range(-1.0..=1.0);
        let dy: f64 = rng.random_range(-1.0..=1.0);
        p.x = (p.x + dx * half_x).clamp(domain.x_min, domain.x_max);
        p.y = (p.y + dy * half_y).clamp(domain.y_min, domain.y_max);
    }
    Ok(PointSet {
        points,
        provenance: Provenance::Epsilon,
    })
}

/// Splits `m` into the most nearly square factorisation `nx × ny` with
/// `nx >= ny >= 2`.
pub fn square_factorization(m: usize) -> Result<(usize, usize)> {
    let root = (m as f64).sqrt().floor() as usize;
    (2..=root)
        .rev()
        .find(|ny| m.is_multiple_of(*ny))
        .map(|ny| (m / ny, ny))
        .ok_or_else(|| {
            Error::Domain(format!(
                "{m} points cannot be arranged as a grid of at least 2x2"
            ))
        })
}
