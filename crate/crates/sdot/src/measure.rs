//! Discretized source measures: midpoint-rule grid quadrature and CSV import.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Tolerance on the total mass of a constructed measure.
pub const MASS_SUM_TOL: f64 = 1e-12;
/// Raw CSV mass sums deviating from 1 by more than this trigger a warning.
pub const CSV_RENORM_WARN: f64 = 1e-6;

/// Axis-aligned bounding box in `R^n`.
#[derive(Debug, Clone)]
pub struct BoundingBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("bounds: lower/upper dimension mismatch"));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !l.is_finite() || !h.is_finite() || h <= l {
                return Err(Error::invalid("bounds: nonpositive box extent"));
            }
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *x >= l - 1e-12 && *x <= h + 1e-12)
    }

    fn hull(points: &[f64], dim: usize) -> Self {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in points.chunks(dim) {
            for (d, &x) in p.iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        BoundingBox { lo, hi }
    }
}

/// A finitely supported probability measure: `M` points with positive masses
/// summing to one, together with the bounding box of the support.
#[derive(Debug, Clone)]
pub struct QuadratureMeasure {
    dim: usize,
    points: Vec<f64>,
    masses: Vec<f64>,
    bbox: BoundingBox,
}

impl QuadratureMeasure {
    pub fn new(dim: usize, points: Vec<f64>, masses: Vec<f64>, bbox: BoundingBox) -> Result<Self> {
        if dim == 0 || points.len() != masses.len() * dim || masses.is_empty() {
            return Err(Error::invalid("measure: points/masses size mismatch"));
        }
        if bbox.dim() != dim {
            return Err(Error::invalid("measure: bbox dimension mismatch"));
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::invalid("measure: masses must be positive"));
        }
        let total = pairwise_sum(&masses);
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::invalid(format!(
                "measure: masses sum to {total}, expected 1"
            )));
        }
        for p in points.chunks(dim) {
            if p.iter().any(|x| !x.is_finite()) || !bbox.contains(p) {
                return Err(Error::invalid("measure: point outside bbox"));
            }
        }
        Ok(QuadratureMeasure {
            dim,
            points,
            masses,
            bbox,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }
}

/// Midpoint-rule quadrature of a density over a box: one point per grid cell
/// at its center, mass proportional to `density(center) * cell_volume`,
/// renormalized to total mass one.
pub fn build_grid_measure(
    bounds: &BoundingBox,
    resolution: &[usize],
    density: impl Fn(&[f64]) -> f64,
) -> Result<QuadratureMeasure> {
    let dim = bounds.dim();
    if resolution.len() != dim || resolution.iter().any(|&r| r == 0) {
        return Err(Error::invalid(
            "resolution: need at least one cell per axis",
        ));
    }
    let cells: usize = resolution.iter().product();
    let widths: Vec<f64> = (0..dim)
        .map(|d| (bounds.hi[d] - bounds.lo[d]) / resolution[d] as f64)
        .collect();
    let cell_volume: f64 = widths.iter().product();

    let mut points = Vec::with_capacity(cells * dim);
    let mut raw = Vec::with_capacity(cells);
    let mut index = vec![0usize; dim];
    let mut center = vec![0.0; dim];
    for _ in 0..cells {
        for d in 0..dim {
            center[d] = bounds.lo[d] + (index[d] as f64 + 0.5) * widths[d];
        }
        let w = density(&center);
        if !w.is_finite() || w < 0.0 {
            return Err(Error::invalid("density: must be finite and nonnegative"));
        }
        points.extend_from_slice(&center);
        raw.push(w * cell_volume);
        // odometer over the grid, last axis fastest
        for d in (0..dim).rev() {
            index[d] += 1;
            if index[d] < resolution[d] {
                break;
            }
            index[d] = 0;
        }
    }

    let total = pairwise_sum(&raw);
    if !(total > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    // drop zero-mass cells (density may vanish on part of the box)
    let mut masses = Vec::with_capacity(cells);
    let mut kept_points = Vec::with_capacity(points.len());
    for (i, &m) in raw.iter().enumerate() {
        if m > 0.0 {
            masses.push(m / total);
            kept_points.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        }
    }
    QuadratureMeasure::new(dim, kept_points, masses, bounds.clone())
}

/// Result of a CSV import: the measure plus the raw mass sum seen in the file
/// (masses are always renormalized; callers may warn when the raw sum is off).
#[derive(Debug)]
pub struct MeasureImport {
    pub measure: QuadratureMeasure,
    pub raw_mass_sum: f64,
}

impl MeasureImport {
    /// Warning text when the raw masses deviated from a probability measure.
    pub fn renormalization_warning(&self) -> Option<String> {
        if (self.raw_mass_sum - 1.0).abs() > CSV_RENORM_WARN {
            Some(format!(
                "measure csv: raw masses sum to {:.6}, renormalized to 1",
                self.raw_mass_sum
            ))
        } else {
            None
        }
    }
}

/// Reads a measure from CSV with header `x1,...,xn,mass`.
pub fn read_measure_csv(reader: impl Read) -> Result<MeasureImport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = headers.len();
    if cols < 2 {
        return Err(Error::invalid("measure csv: expected columns x1..xn,mass"));
    }
    let dim = cols - 1;
    for (d, name) in headers.iter().take(dim).enumerate() {
        if name.trim() != format!("x{}", d + 1) {
            return Err(Error::invalid(format!(
                "measure csv: expected header column 'x{}', found '{}'",
                d + 1,
                name
            )));
        }
    }
    if headers.get(dim).map(str::trim) != Some("mass") {
        return Err(Error::invalid("measure csv: last column must be 'mass'"));
    }

    let mut points = Vec::new();
    let mut raw = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != cols {
            return Err(Error::invalid(format!(
                "measure csv: row {} has {} fields, expected {}",
                line + 2,
                record.len(),
                cols
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::invalid(format!("measure csv: bad number '{s}' on row {}", line + 2))
            })
        };
        for field in record.iter().take(dim) {
            points.push(parse(field)?);
        }
        raw.push(parse(record.get(dim).unwrap())?);
    }
    if raw.is_empty() {
        return Err(Error::invalid("measure csv: no data rows"));
    }
    if raw.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::invalid("measure csv: masses must be positive"));
    }
    let raw_mass_sum = pairwise_sum(&raw);
    let masses: Vec<f64> = raw.iter().map(|m| m / raw_mass_sum).collect();
    let bbox = BoundingBox::hull(&points, dim);
    Ok(MeasureImport {
        measure: QuadratureMeasure::new(dim, points, masses, bbox)?,
        raw_mass_sum,
    })
}

/// Convenience wrapper reading from a file path.
pub fn read_measure_csv_path(path: impl AsRef<Path>) -> Result<MeasureImport> {
    read_measure_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_interval() -> BoundingBox {
        BoundingBox::new(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn uniform_resolution_4_gives_quarter_masses_at_midpoints() {
        let m = build_grid_measure(&unit_interval(), &[4], |_| 1.0).unwrap();
        assert_eq!(m.len(), 4);
        let expected = [0.125, 0.375, 0.625, 0.875];
        for (i, &x) in expected.iter().enumerate() {
            assert!((m.point(i)[0] - x).abs() < 1e-15);
            assert!((m.mass(i) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_square_2x2_gives_four_quarter_cells() {
        let b = BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let m = build_grid_measure(&b, &[2, 2], |_| 1.0).unwrap();
        assert_eq!(m.len(), 4);
        for i in 0..4 {
            assert!((m.mass(i) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_density_weights_midpoint_values() {
        let m = build_grid_measure(&unit_interval(), &[2], |x| x[0]).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.mass(0) - 0.25).abs() < 1e-15);
        assert!((m.mass(1) - 0.75).abs() < 1e-15);
        assert!((m.point(0)[0] - 0.25).abs() < 1e-15);
        assert!((m.point(1)[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_density_is_degenerate() {
        let err = build_grid_measure(&unit_interval(), &[4], |_| 0.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateDensity));
    }

    #[test]
    fn inverted_box_rejected() {
        assert!(BoundingBox::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn total_mass_is_one_for_every_resolution() {
        for res in [1usize, 3, 17, 100, 999] {
            let m = build_grid_measure(&unit_interval(), &[res], |x| 1.0 + x[0]).unwrap();
            assert!((pairwise_sum(m.masses()) - 1.0).abs() <= MASS_SUM_TOL);
        }
    }

    #[test]
    fn csv_round_trip_with_renormalization() {
        let data = "x1,mass\n0.25,0.5\n0.75,0.6\n";
        let imported = read_measure_csv(data.as_bytes()).unwrap();
        assert_eq!(imported.measure.len(), 2);
        assert!((imported.raw_mass_sum - 1.1).abs() < 1e-12);
        assert!(imported.renormalization_warning().is_some());
        assert!((pairwise_sum(imported.measure.masses()) - 1.0).abs() <= MASS_SUM_TOL);
    }

    #[test]
    fn csv_rejects_bad_header() {
        let data = "a,mass\n0.25,1.0\n";
        assert!(read_measure_csv(data.as_bytes()).is_err());
    }

    #[test]
    fn csv_rejects_nonpositive_mass() {
        let data = "x1,mass\n0.25,0.0\n";
        assert!(read_measure_csv(data.as_bytes()).is_err());
    }
}
