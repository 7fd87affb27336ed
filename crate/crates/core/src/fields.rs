//! Analytic test surfaces and scattered-data files.

use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointgen::{fmt_f64, Domain2, Point2, PointSet};

/// Sample sites `x_i` paired with scalar values `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredData {
    points: PointSet,
    values: Vec<f64>,
}

impl ScatteredData {
    pub fn new(points: PointSet, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::Contract(format!(
                "{} sites but {} values",
                points.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "sample values",
                row: i,
                col: 0,
            });
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                what: "sample sites",
                row: i,
                col: 0,
            });
        }
        Ok(ScatteredData { points, values })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same sites, every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ScatteredData::new(
            self.points.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// `x,y,h` CSV with 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str("x,y,h\n");
        for (p, h) in self.points.iter().zip(&self.values) {
            out.push_str(&fmt_f64(p.x));
            out.push(',');
            out.push_str(&fmt_f64(p.y));
            out.push(',');
            out.push_str(&fmt_f64(*h));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let rows = parse_csv_columns(text, &["x", "y", "h"])?;
        let mut points = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        for row in rows {
            points.push(Point2::new(row[0], row[1]));
            values.push(row[2]);
        }
        ScatteredData::new(PointSet::external(points)?, values)
    }
}

/// Reads the named columns (in the order given) from a headed CSV table.
/// Line numbers in errors are 1-based and count the header as line 1.
pub(crate) fn parse_csv_columns(text: &str, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let index: Vec<usize> = columns
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("missing column `{name}`"),
                })
        })
        .collect::<Result<_>>()?;
    let width = headers.len();

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let row = index
            .iter()
            .zip(columns)
            .map(|(&i, name)| {
                let cell = &record[i];
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column `{name}`: `{cell}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// `sin(t)/t` with the removable singularity filled in.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}

/// `sinc(πx/1000)·sinc(πy/500)`, natural domain `[0,1000] × [0,500]`.
pub fn sinc2d(x: f64, y: f64) -> f64 {
    sinc(PI * x / 1000.0) * sinc(PI * y / 500.0)
}

/// Franke's four-Gaussian test surface on `[0,1]²`.
pub fn franke(x: f64, y: f64) -> f64 {
    let (x9, y9) = (9.0 * x, 9.0 * y);
    let t1 = 0.75 * (-((x9 - 2.0).powi(2) + (y9 - 2.0).powi(2)) / 4.0).exp();
    let t2 = 0.75 * (-(x9 + 1.0).powi(2) / 49.0 - (y9 + 1.0) / 10.0).exp();
    let t3 = 0.5 * (-((x9 - 7.0).powi(2) + (y9 - 3.0).powi(2)) / 4.0).exp();
    let t4 = -0.2 * (-(x9 - 4.0).powi(2) - (y9 - 7.0).powi(2)).exp();
    t1 + t2 + t3 + t4
}

/// A ground-truth surface together with the rectangle it is defined on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Field {
    Sinc2d,
    /// Franke's function stretched from the unit square onto `domain`.
    Franke {
        domain: Domain2,
    },
    Constant {
        value: f64,
        domain: Domain2,
    },
    /// `ax·x + ay·y + a0`.
    Linear {
        ax: f64,
        ay: f64,
        a0: f64,
        domain: Domain2,
    },
    Scaled {
        factor: f64,
        inner: Box<Field>,
    },
}

impl Field {
    pub const SINC_DOMAIN: Domain2 = Domain2 {
        x_min: 0.0,
        x_max: 1000.0,
        y_min: 0.0,
        y_max: 500.0,
    };

    pub fn franke_unit() -> Self {
        Field::Franke {
            domain: Domain2::UNIT,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Field::Sinc2d => "sinc2d".into(),
            Field::Franke { .. } => "franke".into(),
            Field::Constant { .. } => "constant".into(),
            Field::Linear { .. } => "linear".into(),
            Field::Scaled { factor, inner } => format!("{factor}*{}", inner.name()),
        }
    }

    pub fn domain(&self) -> Domain2 {
        match self {
            Field::Sinc2d => Self::SINC_DOMAIN,
            Field::Franke { domain }
            | Field::Constant { domain, .. }
            | Field::Linear { domain, .. } => *domain,
            Field::Scaled { inner, .. } => inner.domain(),
        }
    }

    /// Evaluates the surface formula; total, no domain check.
    pub fn value(&self, p: &Point2) -> f64 {
        match self {
            Field::Sinc2d => sinc2d(p.x, p.y),
            Field::Franke { domain } => {
                let (u, v) = domain.to_unit(p);
                franke(u, v)
            }
            Field::Constant { value, .. } => *value,
            Field::Linear { ax, ay, a0, .. } => ax * p.x + ay * p.y + a0,
            Field::Scaled { factor, inner } => factor * inner.value(p),
        }
    }

    /// Samples the field at every site; sites must lie in the field's domain.
    pub fn sample(&self, sites: &PointSet) -> Result<ScatteredData> {
        let domain = self.domain();
        if let Some(i) = sites.iter().position(|p| !domain.contains(p)) {
            let p = sites.points[i];
            return Err(Error::Domain(format!(
                "site {i} at ({}, {}) lies outside the {} domain {domain}",
                p.x,
                p.y,
                self.name()
            )));
        }
        let values = sites.iter().map(|p| self.value(p)).collect();
        ScatteredData::new(sites.clone(), values)
    }
}

/// Same as [`Field::sample`].
pub fn sample_field(field: &Field, sites: &PointSet) -> Result<ScatteredData> {
    field.sample(sites)
}

/// Parses `sinc2d` or `franke`; Franke gets its conventional unit square.
impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sinc2d" | "sinc" => Ok(Field::Sinc2d),
            "franke" => Ok(Field::franke_unit()),
            other => Err(Error::Domain(format!(
                "unknown field `{other}` (expected sinc2d or franke)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointgen::halton_points;
    use proptest::prelude::*;

    #[test]
    fn sinc_values() {
        assert_eq!(sinc2d(0.0, 0.0), 1.0);
        assert!(sinc2d(1000.0, 250.0).abs() < 1e-15);
        let expect = (2.0 / PI).powi(2);
        assert!((sinc2d(500.0, 250.0) - expect).abs() <= 1e-15);
    }

    #[test]
    fn franke_values() {
        let origin = 0.75 * (-2.0f64).exp()
            + 0.75 * (-1.0 / 49.0 - 1.0 / 10.0f64).exp()
            + 0.5 * (-14.5f64).exp()
            - 0.2 * (-65.0f64).exp();
        assert!((franke(0.0, 0.0) - origin).abs() <= 1e-15);
        assert!((franke(0.0, 0.0) - 0.766_420_591_284_923_1).abs() <= 1e-15);
        let corner = franke(1.0, 1.0);
        assert!((corner - 0.035_869_592_386_104_49).abs() <= 1e-15);
        assert!(corner > 0.0 && corner < 1.0);
    }

    #[test]
    fn franke_bracket_on_unit_square() {
        // extremes of a 1001x1001 sweep: min 0.0011172..., max 1.2200325...
        let n = 1001;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..n {
            for i in 0..n {
                let v = franke(i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert!((lo - 0.001_117_202_238_481_052).abs() < 1e-12);
        assert!((hi - 1.220_032_532_778_274_6).abs() < 1e-12);
        let f = Field::franke_unit();
        for p in halton_points(500, 1, &Domain2::UNIT).unwrap().iter() {
            let v = f.value(p);
            assert!((0.0011..=1.2201).contains(&v));
        }
    }

    #[test]
    fn stretched_franke_matches_unit() {
        let d = Domain2::new(0.0, 500.0, 0.0, 500.0).unwrap();
        let f = Field::Franke { domain: d };
        assert_eq!(f.value(&Point2::new(250.0, 125.0)), franke(0.5, 0.25));
    }

    #[test]
    fn sample_checks_domain() {
        let sites = PointSet::external(vec![Point2::new(0.5, 0.5), Point2::new(1.5, 0.5)]).unwrap();
        let err = Field::franke_unit().sample(&sites).unwrap_err();
        assert!(err.to_string().contains("site 1"), "{err}");
        let empty = PointSet::external(vec![]).unwrap();
        assert!(Field::Sinc2d.sample(&empty).unwrap().is_empty());
    }

    #[test]
    fn constant_and_order() {
        let d = Field::SINC_DOMAIN;
        let sites = halton_points(37, 1, &d).unwrap();
        let c = Field::Constant {
            value: 2.5,
            domain: d,
        }
        .sample(&sites)
        .unwrap();
        assert!(c.values().iter().all(|&v| v == 2.5));
        let s = Field::Sinc2d.sample(&sites).unwrap();
        assert_eq!(s.points(), &sites);
        for (p, v) in sites.iter().zip(s.values()) {
            assert_eq!(*v, sinc2d(p.x, p.y));
        }
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = ScatteredData::from_csv_str("x,y,h\n1.0,2.0,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ScatteredData::from_csv_str("x,y\n1,2\n").unwrap_err();
        assert!(err.to_string().contains("`h`"), "{err}");
        let err = ScatteredData::from_csv_str("x,y,h\n1,2,3\n4,5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(ScatteredData::from_csv_str("x,y,h\n").unwrap().is_empty());
        let crlf = ScatteredData::from_csv_str("x,y,h\r\n1,2,3\r\n").unwrap();
        assert_eq!(crlf.values(), [3.0]);
    }

    proptest! {
        #[test]
        fn sinc_is_even_in_each_argument(x in -3000.0f64..3000.0, y in -3000.0f64..3000.0) {
            let v = sinc2d(x, y);
            prop_assert_eq!(v, sinc2d(-x, y));
            prop_assert_eq!(v, sinc2d(x, -y));
        }

        #[test]
        fn csv_round_trip(vals in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6, -1e3f64..1e3), 0..20)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("d.csv");
            let points = vals.iter().map(|&(x, y, _)| Point2::new(x, y)).collect();
            let data = ScatteredData::new(
                PointSet::external(points).unwrap(),
                vals.iter().map(|v| v.2).collect(),
            ).unwrap();
            data.save(&path).unwrap();
            let back = ScatteredData::load(&path).unwrap();
            prop_assert_eq!(back.values(), data.values());
            prop_assert_eq!(&back.points().points, &data.points().points);
        }
    }
}
