//! Datasets, standardization and the one-shot stream abstraction.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Format a float with 17 significant digits, which round-trips any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A matrix of observations (rows) over named process variables, with an
/// optional response column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    features: DMatrix<f64>,
    feature_names: Vec<String>,
    response: Option<DVector<f64>>,
}

impl RawDataset {
    pub fn new(
        features: DMatrix<f64>,
        feature_names: Vec<String>,
        response: Option<DVector<f64>>,
    ) -> Result<Self> {
        let (n, p) = features.shape();
        if n == 0 || p == 0 {
            return Err(Error::NotEnoughData {
                what: "dataset rows and columns",
                needed: 1,
                got: n.min(p),
            });
        }
        if feature_names.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: feature_names.len(),
            });
        }
        if let Some(y) = &response {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: y.len(),
                });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue("response".into()));
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("features".into()));
        }
        Ok(Self {
            features,
            feature_names,
            response,
        })
    }

    /// Builds a dataset with generated column names `x1..xp`.
    pub fn from_matrix(features: DMatrix<f64>, response: Option<DVector<f64>>) -> Result<Self> {
        let names = (1..=features.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(features, names, response)
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn response(&self) -> Option<&DVector<f64>> {
        self.response.as_ref()
    }

    /// Row `i` as an owned column vector.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    /// Drops the response, leaving an unlabeled dataset.
    pub fn without_response(mut self) -> Self {
        self.response = None;
        self
    }

    /// Rows `start..end` as a new dataset.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        self.select_rows(&(start..end).collect::<Vec<_>>())
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select_rows(indices);
        let response = self
            .response
            .as_ref()
            .map(|y| DVector::from_iterator(indices.len(), indices.iter().map(|&i| y[i])));
        Self::new(features, self.feature_names.clone(), response)
    }

    /// Writes the dataset as CSV; the response, if any, is the last column.
    pub fn write_csv(&self, path: impl AsRef<Path>, response_name: &str) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        if self.response.is_some() {
            header.push(response_name);
        }
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|&v| fmt_f64(v)).collect();
            if let Some(y) = &self.response {
                rec.push(fmt_f64(y[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Reads a headed CSV file. When `response_column` is given, that column is
/// pulled out as the response and removed from the features.
///
/// Row numbers in errors are 1-based data rows (the header is not counted).
pub fn load_csv(path: impl AsRef<Path>, response_column: Option<&str>) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();

    let response_idx = match response_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?,
        ),
        None => None,
    };

    let mut cells: Vec<f64> = Vec::new();
    let mut response = Vec::new();
    let mut n = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: header.len(),
                got: record.len(),
            });
        }
        for (c, raw) in record.iter().enumerate() {
            let text = raw.trim();
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: header[c].clone(),
                value: text.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: r + 1,
                    column: header[c].clone(),
                    value: text.to_string(),
                });
            }
            if Some(c) == response_idx {
                response.push(v);
            } else {
                cells.push(v);
            }
        }
        n += 1;
    }

    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(c, _)| Some(*c) != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = names.len();
    if n == 0 || p == 0 {
        return Err(Error::NotEnoughData {
            what: "csv rows and feature columns",
            needed: 1,
            got: n.min(p),
        });
    }
    let features = DMatrix::from_row_slice(n, p, &cells);
    let response = response_idx.map(|_| DVector::from_vec(response));
    RawDataset::new(features, names, response)
}

/// Per-column centering and scaling fit on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: DVector<f64>,
    scales: DVector<f64>,
}

impl Standardizer {
    pub fn new(means: DVector<f64>, scales: DVector<f64>) -> Result<Self> {
        if means.len() != scales.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: scales.len(),
            });
        }
        if scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("scales must be positive and finite".into()));
        }
        Ok(Self { means, scales })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            means: DVector::zeros(p),
            scales: DVector::from_element(p, 1.0),
        }
    }

    /// Column means and sample standard deviations (divisor n−1).
    /// Constant columns get scale 1.
    pub fn fit(data: &RawDataset) -> Result<Self> {
        let x = data.features();
        let n = x.nrows();
        if n < 2 {
            return Err(Error::NotEnoughData {
                what: "rows to fit a standardizer",
                needed: 2,
                got: n,
            });
        }
        let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()));
        let scales = DVector::from_iterator(
            x.ncols(),
            x.column_iter().zip(means.iter()).map(|(c, &m)| {
                let ss: f64 = c.iter().map(|v| (v - m).powi(2)).sum();
                let sd = (ss / (n - 1) as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            }),
        );
        Ok(Self { means, scales })
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn scales(&self) -> &DVector<f64> {
        &self.scales
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    fn check(&self, p: usize) -> Result<()> {
        if p != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p,
            });
        }
        Ok(())
    }

    /// `(x − mean) / scale` column-wise; the response is left untouched.
    pub fn apply(&self, data: &RawDataset) -> Result<RawDataset> {
        self.check(data.n_features())?;
        let mut x = data.features().clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        RawDataset::new(x, data.feature_names().to_vec(), data.response().cloned())
    }

    pub fn apply_vec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x.len())?;
        Ok(x.zip_zip_map(&self.means, &self.scales, |v, m, s| (v - m) / s))
    }

    pub fn invert(&self, data: &RawDataset) -> Result<RawDataset> {
        self.check(data.n_features())?;
        let mut x = data.features().clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.apply(|v| *v = *v * s + m);
        }
        RawDataset::new(x, data.feature_names().to_vec(), data.response().cloned())
    }
}

/// Convenience wrapper around [`Standardizer::fit`].
pub fn fit_standardizer(data: &RawDataset) -> Result<Standardizer> {
    Standardizer::fit(data)
}

/// Convenience wrapper around [`Standardizer::apply`].
pub fn standardize(data: &RawDataset, s: &Standardizer) -> Result<RawDataset> {
    s.apply(data)
}

/// An ordered stream of observations whose labels stay hidden until queried.
///
/// Each observation is emitted once; a label can only be read for an index
/// that has already been emitted.
#[derive(Debug, Clone)]
pub struct StreamSource {
    xs: Vec<DVector<f64>>,
    labels: Vec<f64>,
    cursor: usize,
}

impl StreamSource {
    pub fn new(xs: Vec<DVector<f64>>, labels: Vec<f64>) -> Result<Self> {
        if xs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: labels.len(),
            });
        }
        Ok(Self {
            xs,
            labels,
            cursor: 0,
        })
    }

    /// Builds a stream from a labeled dataset, in row order.
    pub fn from_dataset(data: &RawDataset) -> Result<Self> {
        let y = data.response().ok_or(Error::MissingColumn("response".into()))?;
        let xs = (0..data.n_rows()).map(|i| data.row(i)).collect();
        Self::new(xs, y.iter().copied().collect())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.xs.len() - self.cursor
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor >= self.xs.len()
    }

    /// Emits the next observation together with its stream index.
    pub fn next_observation(&mut self) -> Option<(usize, &DVector<f64>)> {
        if self.is_exhausted() {
            return None;
        }
        let i = self.cursor;
        self.cursor += 1;
        Some((i, &self.xs[i]))
    }

    /// Reveals the label of an already emitted observation.
    pub fn query(&self, index: usize) -> Result<f64> {
        if index >= self.cursor {
            return Err(Error::InvalidParameter(format!(
                "label {index} requested before the observation was emitted"
            )));
        }
        Ok(self.labels[index])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_with_and_without_response() {
        let f = write_tmp("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let d = load_csv(f.path(), Some("y")).unwrap();
        assert_eq!((d.n_rows(), d.n_features()), (3, 2));
        assert_eq!(d.feature_names(), &["a", "b"]);
        assert_eq!(d.response().unwrap().as_slice(), &[3.0, 6.0, 9.0]);
        assert_eq!(d.features()[(2, 1)], 8.0);

        let d = load_csv(f.path(), None).unwrap();
        assert_eq!(d.n_features(), 3);
        assert!(d.response().is_none());
    }

    #[test]
    fn load_rejects_nan_with_location() {
        let f = write_tmp("a,b\n1,2\n3,NaN\n");
        match load_csv(f.path(), None) {
            Err(Error::NonFinite { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_errors() {
        let f = write_tmp("a,b\n1,x\n");
        assert!(matches!(load_csv(f.path(), None), Err(Error::Parse { row: 1, .. })));
        let f = write_tmp("a,b\n1,2\n");
        assert!(matches!(load_csv(f.path(), Some("y")), Err(Error::MissingColumn(_))));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", None),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let x = DMatrix::from_fn(5, 3, |i, j| ((i * 7 + j) as f64).sin() / 3.0);
        let y = DVector::from_fn(5, |i, _| (i as f64).exp() * 1e-7);
        let d = RawDataset::from_matrix(x, Some(y)).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path(), "y").unwrap();
        let back = load_csv(f.path(), Some("y")).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn standardizer_two_points_and_constant_column() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 3.0, 5.0, 2.0, 5.0]);
        let s = Standardizer::fit(&RawDataset::from_matrix(x, None).unwrap()).unwrap();
        assert_eq!(s.means()[0], 2.0);
        assert_eq!(s.scales()[0], 1.0);
        assert_eq!(s.means()[1], 5.0);
        assert_eq!(s.scales()[1], 1.0);

        let x = DMatrix::from_row_slice(2, 1, &[1.0, 3.0]);
        let s = Standardizer::fit(&RawDataset::from_matrix(x, None).unwrap()).unwrap();
        assert_eq!(s.means()[0], 2.0);
        assert!((s.scales()[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn standardizer_needs_two_rows() {
        let d = RawDataset::from_matrix(DMatrix::from_element(1, 2, 1.0), None).unwrap();
        assert!(matches!(Standardizer::fit(&d), Err(Error::NotEnoughData { .. })));
    }

    #[test]
    fn standardize_simple_and_identity() {
        let s = Standardizer::new(DVector::from_vec(vec![2.0]), DVector::from_vec(vec![3.0])).unwrap();
        let d = RawDataset::from_matrix(DMatrix::from_element(1, 1, 2.0), None).unwrap();
        assert_eq!(s.apply(&d).unwrap().features()[(0, 0)], 0.0);

        let d = RawDataset::from_matrix(DMatrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64), None).unwrap();
        assert_eq!(Standardizer::identity(3).apply(&d).unwrap(), d);
        assert!(Standardizer::identity(2).apply(&d).is_err());
    }

    #[test]
    fn standardized_moments() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(100, 16, |_, j| rng.random::<f64>() * (j as f64 + 1.0) + j as f64);
        let d = RawDataset::from_matrix(x, None).unwrap();
        let z = Standardizer::fit(&d).unwrap().apply(&d).unwrap();
        for col in z.features().column_iter() {
            let m = col.mean();
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 99.0;
            assert!(m.abs() < 1e-10);
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn stream_emits_once_and_hides_labels() {
        let xs = vec![DVector::from_element(2, 0.0), DVector::from_element(2, 1.0)];
        let mut s = StreamSource::new(xs, vec![10.0, 20.0]).unwrap();
        assert!(s.query(0).is_err());
        let (i, _) = s.next_observation().unwrap();
        assert_eq!(i, 0);
        assert_eq!(s.query(0).unwrap(), 10.0);
        assert!(s.query(1).is_err());
        assert_eq!(s.next_observation().unwrap().0, 1);
        assert!(s.next_observation().is_none());
        assert!(s.is_exhausted());
    }

    proptest::proptest! {
        #[test]
        fn standardize_inverse_round_trip(
            vals in proptest::collection::vec(-1e6f64..1e6, 12),
            scale in 1e-3f64..1e3,
        ) {
            let x = DMatrix::from_row_slice(4, 3, &vals) * scale;
            let d = RawDataset::from_matrix(x.clone(), None).unwrap();
            let s = Standardizer::fit(&d).unwrap();
            let back = s.invert(&s.apply(&d).unwrap()).unwrap();
            for (j, col) in x.column_iter().enumerate() {
                let mag = col.amax();
                for (i, b) in col.iter().enumerate() {
                    let a = back.features()[(i, j)];
                    proptest::prop_assert!((a - b).abs() <= 1e-12 * mag);
                }
            }
        }
    }
}
