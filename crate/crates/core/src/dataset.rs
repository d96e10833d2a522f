//! Labelled point sets, per-class centroids and CSV ingestion.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cells treated as missing values during ingestion.
const MISSING_MARKERS: &[&str] = &["", "NA", "N/A", "NaN", "nan", "?"];

/// An `n × d` matrix of features with one class id per row.
///
/// Class ids are dense: every id in `0..class_count` labels at least one row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major `points`.
    pub fn new(points: Vec<f64>, dim: usize, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("feature dimension must be at least 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if points.len() != labels.len() * dim {
            return Err(Error::Data(format!(
                "{} feature values do not form {} rows of dimension {dim}",
                points.len(),
                labels.len()
            )));
        }
        if let Some(v) = points.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite feature value {v}")));
        }
        let class_count = class_names.len();
        if class_count == 0 {
            return Err(Error::Data("dataset has no classes".into()));
        }
        let mut seen = vec![false; class_count];
        for &l in &labels {
            if l >= class_count {
                return Err(Error::Data(format!("label {l} outside 0..{class_count}")));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Data(format!(
                "class `{}` (id {missing}) has no rows",
                class_names[missing]
            )));
        }
        Ok(Self {
            points,
            dim,
            labels,
            class_names,
        })
    }

    /// Convenience constructor naming classes `c0`, `c1`, ...
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Data("rows have differing dimensions".into()));
        }
        let class_count = labels.iter().max().map_or(0, |m| m + 1);
        let names = (0..class_count).map(|c| format!("c{c}")).collect();
        Self::new(rows.concat(), dim, labels, names)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Writes the dataset as CSV with columns `x0..x{d-1},label`.
    ///
    /// Reals use the shortest representation that parses back to the same bits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, &label) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.class_names[label].clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// What [`load_csv`] had to do to the raw file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
}

/// Column selection for CSV ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvSpec {
    /// Columns joined with `_` to form the class label.
    pub label_columns: Vec<String>,
    /// Feature columns; empty means every column not used for the label.
    pub feature_columns: Vec<String>,
}

impl CsvSpec {
    pub fn new<S: Into<String>>(label_columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            label_columns: label_columns.into_iter().map(Into::into).collect(),
            feature_columns: Vec::new(),
        }
    }

    pub fn with_features<S: Into<String>>(mut self, cols: impl IntoIterator<Item = S>) -> Self {
        self.feature_columns = cols.into_iter().map(Into::into).collect();
        self
    }
}

/// Reads a labelled dataset from a CSV file.
///
/// Labels are factorized in first-appearance order. Rows with a missing
/// value in any selected column are dropped and counted in the report.
pub fn load_csv(path: impl AsRef<Path>, spec: &CsvSpec) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, spec, None)
}

/// Like [`load_csv`], but maps labels through an existing class dictionary
/// instead of factorizing them. Unknown labels are a data error.
pub fn load_csv_with_classes(
    path: impl AsRef<Path>,
    spec: &CsvSpec,
    class_names: &[String],
) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, spec, Some(class_names))
}

pub fn read_csv<R: Read>(
    input: R,
    spec: &CsvSpec,
    known_classes: Option<&[String]>,
) -> Result<(Dataset, LoadReport)> {
    if spec.label_columns.is_empty() {
        return Err(Error::Usage("at least one label column is required".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let label_idx = spec
        .label_columns
        .iter()
        .map(|c| index_of(c))
        .collect::<Result<Vec<_>>>()?;
    let feature_idx = if spec.feature_columns.is_empty() {
        (0..headers.len()).filter(|i| !label_idx.contains(i)).collect()
    } else {
        spec.feature_columns
            .iter()
            .map(|c| index_of(c))
            .collect::<Result<Vec<_>>>()?
    };
    if feature_idx.is_empty() {
        return Err(Error::Data("no feature columns selected".into()));
    }

    let mut names: Vec<String> = known_classes.map(<[String]>::to_vec).unwrap_or_default();
    let mut ids: HashMap<String, usize> = names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut rows_read = 0;
    let mut rows_dropped = 0;

    'rows: for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows_read += 1;
        let is_missing = |i: usize| rec.get(i).is_none_or(|s| MISSING_MARKERS.contains(&s.trim()));
        if label_idx.iter().chain(&feature_idx).any(|&i| is_missing(i)) {
            rows_dropped += 1;
            continue 'rows;
        }
        let label = label_idx.iter().map(|&i| rec[i].trim()).collect::<Vec<_>>().join("_");
        for &i in &feature_idx {
            let cell = rec[i].trim();
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "row {}: column `{}` value `{cell}` is not a number",
                    line + 2,
                    &headers[i]
                ))
            })?;
            points.push(v);
        }
        let id = match ids.get(&label) {
            Some(&id) => id,
            None if known_classes.is_some() => {
                return Err(Error::Data(format!("row {}: unknown class `{label}`", line + 2)));
            }
            None => {
                let id = names.len();
                ids.insert(label.clone(), id);
                names.push(label);
                id
            }
        };
        labels.push(id);
    }
    if labels.is_empty() {
        return Err(Error::Data(format!(
            "no usable rows ({rows_read} read, {rows_dropped} incomplete)"
        )));
    }
    if known_classes.is_some() {
        // Evaluation data need not contain every class.
        let ds = Dataset {
            points,
            dim: feature_idx.len(),
            labels,
            class_names: names,
        };
        if ds.points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        return Ok((ds, LoadReport { rows_read, rows_dropped }));
    }
    let ds = Dataset::new(points, feature_idx.len(), labels, names)?;
    Ok((ds, LoadReport { rows_read, rows_dropped }))
}

/// Per-class arithmetic means; row `i` belongs to class id `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSet {
    rows: Vec<Vec<f64>>,
}

impl CentroidSet {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Data("centroids must be non-empty rows of equal dimension".into()));
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, class: usize) -> &[f64] {
        &self.rows[class]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

pub fn centroids(ds: &Dataset) -> CentroidSet {
    let d = ds.dim();
    let mut sums = vec![vec![0.0; d]; ds.class_count()];
    let mut counts = vec![0usize; ds.class_count()];
    for (row, &l) in ds.rows().zip(ds.labels()) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= c as f64;
        }
    }
    CentroidSet { rows: sums }
}

/// Numerical tolerances shared by line-finding and prototype optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Maximum coefficient drift accepted when growing a regression line.
    pub eps_reg: f64,
    /// Distance guard in influence denominators.
    pub eps_opt: f64,
}

impl ToleranceConfig {
    pub const DEFAULT_EPS_REG: f64 = 0.1;
    pub const DEFAULT_EPS_OPT: f64 = 0.01;

    pub fn new(eps_reg: f64, eps_opt: f64) -> Result<Self> {
        if !(eps_reg > 0.0 && eps_reg.is_finite()) {
            return Err(Error::Usage(format!("eps_reg must be positive, got {eps_reg}")));
        }
        if !(eps_opt > 0.0 && eps_opt.is_finite()) {
            return Err(Error::Usage(format!("eps_opt must be positive, got {eps_opt}")));
        }
        Ok(Self { eps_reg, eps_opt })
    }

    /// Strict-dominance slack, `eps_opt²`.
    pub fn margin(&self) -> f64 {
        self.eps_opt * self.eps_opt
    }
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_reg: Self::DEFAULT_EPS_REG,
            eps_opt: Self::DEFAULT_EPS_OPT,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(labels: &[&str]) -> CsvSpec {
        CsvSpec::new(labels.iter().copied())
    }

    #[test]
    fn centroid_of_two_points() {
        let ds = Dataset::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]], vec![0, 0]).unwrap();
        assert_eq!(centroids(&ds).get(0), &[1.0, 0.0]);
    }

    #[test]
    fn single_point_classes_are_their_own_centroids() {
        let rows = vec![vec![3.0, -1.0], vec![0.5, 2.0]];
        let ds = Dataset::from_rows(&rows, vec![0, 1]).unwrap();
        assert_eq!(centroids(&ds).rows(), rows.as_slice());
    }

    #[test]
    fn constant_classes() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, p) in [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]].iter().enumerate() {
            for _ in 0..100 {
                rows.push(p.to_vec());
                labels.push(c);
            }
        }
        let cs = centroids(&Dataset::from_rows(&rows, labels).unwrap());
        assert_eq!(cs.rows(), &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    }

    #[test]
    fn rejects_class_without_rows() {
        let err = Dataset::new(vec![0.0, 1.0], 1, vec![0, 0], vec!["a".into(), "b".into()]).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn one_row_csv() {
        let (ds, rep) = read_csv("f,y\n1.5,a\n".as_bytes(), &spec(&["y"]), None).unwrap();
        assert_eq!((ds.len(), ds.class_count(), ds.dim()), (1, 1, 1));
        assert_eq!(rep.rows_dropped, 0);
    }

    #[test]
    fn factorizes_in_first_appearance_order_and_drops_incomplete_rows() {
        let csv = "s,i,a,b\nB,x,1,2\nA,x,3,NA\nA,y,5,6\nB,x,7,8\n";
        let (ds, rep) = read_csv(csv.as_bytes(), &spec(&["s", "i"]), None).unwrap();
        assert_eq!(ds.class_names(), &["B_x".to_string(), "A_y".to_string()]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(rep, LoadReport { rows_read: 4, rows_dropped: 1 });
        assert_eq!(ds.point(1), &[5.0, 6.0]);
    }

    #[test]
    fn missing_column_is_reported() {
        let err = read_csv("a,b\n1,2\n".as_bytes(), &spec(&["y"]), None).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "y"));
    }

    #[test]
    fn zero_usable_rows() {
        let err = read_csv("a,y\nNA,p\n,q\n".as_bytes(), &spec(&["y"]), None).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn non_numeric_feature() {
        let err = read_csv("a,y\nfoo,p\n".as_bytes(), &spec(&["y"]), None).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn known_class_dictionary() {
        let names = vec!["p".to_string(), "q".to_string()];
        let (ds, _) = read_csv("a,y\n1,q\n2,q\n".as_bytes(), &spec(&["y"]), Some(&names)).unwrap();
        assert_eq!(ds.labels(), &[1, 1]);
        let err = read_csv("a,y\n1,r\n".as_bytes(), &spec(&["y"]), Some(&names)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![vec![0.1 + 0.2, -1e-300], vec![std::f64::consts::PI, 12345.678]];
        let ds = Dataset::from_rows(&rows, vec![1, 0]).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let (back, _) = read_csv(buf.as_slice(), &spec(&["label"]), Some(ds.class_names())).unwrap();
        assert_eq!(back.points(), ds.points());
        assert_eq!(back.labels(), ds.labels());
    }

    #[test]
    fn tolerance_defaults() {
        let t = ToleranceConfig::default();
        assert_eq!(t.eps_opt, 0.01);
        assert_eq!(t.margin(), 0.01 * 0.01);
        assert!(ToleranceConfig::new(0.0, 0.01).is_err());
        assert!(ToleranceConfig::new(0.1, -1.0).is_err());
    }
}
