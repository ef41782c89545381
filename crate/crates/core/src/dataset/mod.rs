//! Tabular datasets: schema, CSV ingestion, splitting, SMOTE balancing,
//! feature dropout and Pearson correlation.

mod builtin;
mod correlation;
mod smote;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub use builtin::{builtin_schema, BUILTIN_TABULAR};
pub use correlation::{csv_field, pearson_correlation, CorrelationMatrix};
pub use smote::{smote_oversample, DEFAULT_SMOTE_NEIGHBORS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub sensitive: bool,
}

impl FeatureSpec {
    pub fn numeric(name: &str) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            sensitive: false,
        }
    }

    pub fn categorical(name: &str) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            sensitive: false,
        }
    }

    pub fn sensitive(mut self) -> Self {
        self.sensitive = true;
        self
    }
}

/// Ordered feature list plus the label column. The label value equal to
/// `positive_label` becomes class 1, every other value class 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
    pub label_name: String,
    pub positive_label: String,
}

impl FeatureSchema {
    pub fn new(
        features: Vec<FeatureSpec>,
        label_name: impl Into<String>,
        positive_label: impl Into<String>,
    ) -> Result<Self> {
        let schema = FeatureSchema {
            features,
            label_name: label_name.into(),
            positive_label: positive_label.into(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::SchemaMismatch("schema has no features".into()));
        }
        if self.label_name.is_empty() {
            return Err(Error::SchemaMismatch("label column name is empty".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if f.name.is_empty() {
                return Err(Error::SchemaMismatch("empty feature name".into()));
            }
            if f.name == self.label_name {
                return Err(Error::SchemaMismatch(format!(
                    "feature `{}` collides with the label column",
                    f.name
                )));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate feature `{}`",
                    f.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn sensitive_names(&self) -> Vec<String> {
        self.features
            .iter()
            .filter(|f| f.sensitive)
            .map(|f| f.name.clone())
            .collect()
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.features.iter().map(|f| f.kind).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',' }
    }
}

/// Labeled tabular data. Numeric cells hold their value; categorical cells
/// hold the index of the token in the column's sorted category list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    schema: FeatureSchema,
    categories: Vec<Vec<String>>,
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl TabularDataset {
    /// Assembles a dataset, checking row widths, label domain and category codes.
    pub fn from_parts(
        schema: FeatureSchema,
        categories: Vec<Vec<String>>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        schema.validate()?;
        let d = schema.len();
        if categories.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: categories.len(),
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            for (j, spec) in schema.features.iter().enumerate() {
                let v = row[j];
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: i + 1,
                        column: spec.name.clone(),
                        message: "non-finite value".into(),
                    });
                }
                if spec.kind == FeatureKind::Categorical
                    && (v < 0.0 || v.fract() != 0.0 || v as usize >= categories[j].len())
                {
                    return Err(Error::Parse {
                        row: i + 1,
                        column: spec.name.clone(),
                        message: format!("category code {v} out of range"),
                    });
                }
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside binary domain"
            )));
        }
        Ok(TabularDataset {
            schema,
            categories,
            rows,
            labels,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn categories(&self, feature: usize) -> &[String] {
        &self.categories[feature]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_instances(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            schema: self.schema.clone(),
            categories: self.categories.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub(crate) fn with_rows(&self, rows: Vec<Vec<f64>>, labels: Vec<usize>) -> TabularDataset {
        TabularDataset {
            schema: self.schema.clone(),
            categories: self.categories.clone(),
            rows,
            labels,
        }
    }

    /// Human-readable cell value (category token or formatted number).
    pub fn cell_text(&self, row: usize, feature: usize) -> String {
        let v = self.rows[row][feature];
        match self.schema.features[feature].kind {
            FeatureKind::Numeric => format!("{v}"),
            FeatureKind::Categorical => self.categories[feature][v as usize].clone(),
        }
    }

    /// Writes the dataset back to CSV using the schema's column order and
    /// original category tokens. Labels are written as the positive label
    /// or `not_<positive>` when the original negative token is unknown.
    pub fn write_csv(&self, path: &Path, negative_label: &str) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file, negative_label)
    }

    pub fn write_csv_to<W: std::io::Write>(&self, writer: W, negative_label: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.schema.names();
        header.push(self.schema.label_name.clone());
        w.write_record(&header)?;
        for i in 0..self.n_instances() {
            let mut rec: Vec<String> = (0..self.n_features()).map(|j| self.cell_text(i, j)).collect();
            rec.push(if self.labels[i] == 1 {
                self.schema.positive_label.clone()
            } else {
                negative_label.to_string()
            });
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Reads a CSV file whose header must contain exactly the schema's feature
/// columns plus the label column, in any order.
pub fn load_csv(path: &Path, schema: &FeatureSchema, options: CsvOptions) -> Result<TabularDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, options)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    schema: &FeatureSchema,
    options: CsvOptions,
) -> Result<TabularDataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut position: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, h) in header.iter().enumerate() {
        if position.insert(h.as_str(), i).is_some() {
            return Err(Error::SchemaMismatch(format!("duplicate column `{h}`")));
        }
    }
    let expected: BTreeSet<&str> = schema
        .features
        .iter()
        .map(|f| f.name.as_str())
        .chain(std::iter::once(schema.label_name.as_str()))
        .collect();
    for name in &expected {
        if !position.contains_key(name) {
            return Err(Error::SchemaMismatch(format!("missing column `{name}`")));
        }
    }
    for name in position.keys() {
        if !expected.contains(name) {
            return Err(Error::SchemaMismatch(format!(
                "column `{name}` is not in the schema"
            )));
        }
    }
    let columns: Vec<usize> = schema
        .features
        .iter()
        .map(|f| position[f.name.as_str()])
        .collect();
    let label_col = position[schema.label_name.as_str()];

    let d = schema.len();
    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: r + 1,
                column: "*".into(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        raw_rows.push(columns.iter().map(|&c| record[c].trim().to_string()).collect());
        labels.push(usize::from(record[label_col].trim() == schema.positive_label));
    }

    let mut categories: Vec<Vec<String>> = vec![Vec::new(); d];
    for (j, spec) in schema.features.iter().enumerate() {
        if spec.kind == FeatureKind::Categorical {
            let set: BTreeSet<&str> = raw_rows.iter().map(|r| r[j].as_str()).collect();
            categories[j] = set.into_iter().map(String::from).collect();
        }
    }

    let mut rows = Vec::with_capacity(raw_rows.len());
    for (r, raw) in raw_rows.iter().enumerate() {
        let mut row = Vec::with_capacity(d);
        for (j, spec) in schema.features.iter().enumerate() {
            let cell = &raw[j];
            let v = match spec.kind {
                FeatureKind::Numeric => cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::Parse {
                        row: r + 1,
                        column: spec.name.clone(),
                        message: format!("`{cell}` is not a number"),
                    }
                })?,
                FeatureKind::Categorical => {
                    categories[j].binary_search(cell).expect("category collected above") as f64
                }
            };
            row.push(v);
        }
        rows.push(row);
    }

    TabularDataset::from_parts(schema.clone(), categories, rows, labels)
}

/// Shuffles with `seed` and puts the first `floor(n * train_fraction)` rows
/// in the training part.
pub fn train_test_split(
    ds: &TabularDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    let (train, test) = split_indices(ds.n_instances(), train_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

pub(crate) fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let n_train = (n as f64 * train_fraction).floor() as usize;
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Removes the named features. Fails on unknown names or when nothing would remain.
pub fn drop_features<S: AsRef<str>>(ds: &TabularDataset, names: &[S]) -> Result<TabularDataset> {
    let mut drop = BTreeSet::new();
    for n in names {
        let n = n.as_ref();
        let idx = ds.schema.index_of(n).ok_or_else(|| Error::UnknownFeature(n.to_string()))?;
        drop.insert(idx);
    }
    if drop.len() == ds.n_features() {
        return Err(Error::InvalidArgument(
            "dropping every feature leaves an empty feature space".into(),
        ));
    }
    let kept: Vec<usize> = (0..ds.n_features()).filter(|j| !drop.contains(j)).collect();
    let schema = FeatureSchema {
        features: kept.iter().map(|&j| ds.schema.features[j].clone()).collect(),
        label_name: ds.schema.label_name.clone(),
        positive_label: ds.schema.positive_label.clone(),
    };
    Ok(TabularDataset {
        schema,
        categories: kept.iter().map(|&j| ds.categories[j].clone()).collect(),
        rows: ds
            .rows
            .iter()
            .map(|r| kept.iter().map(|&j| r[j]).collect())
            .collect(),
        labels: ds.labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn toy_schema() -> FeatureSchema {
        FeatureSchema::new(
            vec![
                FeatureSpec::numeric("age"),
                FeatureSpec::categorical("sex").sensitive(),
                FeatureSpec::numeric("income"),
            ],
            "label",
            "yes",
        )
        .unwrap()
    }

    #[test]
    fn schema_rejects_duplicates_and_empty() {
        let dup = FeatureSchema::new(
            vec![FeatureSpec::numeric("a"), FeatureSpec::numeric("a")],
            "y",
            "1",
        );
        assert!(matches!(dup, Err(Error::SchemaMismatch(_))));
        assert!(FeatureSchema::new(vec![], "y", "1").is_err());
        assert!(FeatureSchema::new(vec![FeatureSpec::numeric("")], "y", "1").is_err());
    }

    #[test]
    fn reads_csv_in_any_column_order() {
        let text = "sex,label,income,age\nm,yes,10,30\nf,no,\"20\",40\n";
        let ds = read_csv(text.as_bytes(), &toy_schema(), CsvOptions::default()).unwrap();
        assert_eq!(ds.n_instances(), 2);
        assert_eq!(ds.row(0), &[30.0, 1.0, 10.0]);
        assert_eq!(ds.row(1), &[40.0, 0.0, 20.0]);
        assert_eq!(ds.categories(1), &["f".to_string(), "m".to_string()]);
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn header_only_gives_empty_dataset() {
        let ds = read_csv("age,sex,income,label\n".as_bytes(), &toy_schema(), CsvOptions::default()).unwrap();
        assert_eq!(ds.n_instances(), 0);
    }

    #[test]
    fn extra_or_missing_columns_are_schema_errors() {
        let extra = "age,sex,income,label,zip\n1,m,2,yes,9\n";
        assert!(matches!(
            read_csv(extra.as_bytes(), &toy_schema(), CsvOptions::default()),
            Err(Error::SchemaMismatch(_))
        ));
        let missing = "age,sex,label\n1,m,yes\n";
        assert!(matches!(
            read_csv(missing.as_bytes(), &toy_schema(), CsvOptions::default()),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn bad_number_names_row_and_column() {
        let text = "age,sex,income,label\n1,m,2,yes\nold,f,3,no\n";
        match read_csv(text.as_bytes(), &toy_schema(), CsvOptions::default()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "age");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semicolon_delimiter() {
        let text = "age;sex;income;label\n1;m;2;yes\n";
        let ds = read_csv(text.as_bytes(), &toy_schema(), CsvOptions { delimiter: b';' }).unwrap();
        assert_eq!(ds.n_instances(), 1);
    }

    fn numbered(n: usize) -> TabularDataset {
        let schema = FeatureSchema::new(vec![FeatureSpec::numeric("id")], "y", "1").unwrap();
        TabularDataset::from_parts(
            schema,
            vec![vec![]],
            (0..n).map(|i| vec![i as f64]).collect(),
            (0..n).map(|i| i % 2).collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_sizes_use_floor() {
        let (tr, te) = train_test_split(&numbered(1000), 0.7, 3).unwrap();
        assert_eq!((tr.n_instances(), te.n_instances()), (700, 300));
        let (tr, te) = train_test_split(&numbered(3), 0.5, 3).unwrap();
        assert_eq!((tr.n_instances(), te.n_instances()), (1, 2));
        assert!(train_test_split(&numbered(3), 1.0, 3).is_err());
        assert!(train_test_split(&numbered(3), 0.0, 3).is_err());
    }

    #[test]
    fn split_is_seed_deterministic() {
        let ds = numbered(10);
        assert_eq!(train_test_split(&ds, 0.7, 11).unwrap(), train_test_split(&ds, 0.7, 11).unwrap());
    }

    proptest! {
        #[test]
        fn split_preserves_multiset(n in 0usize..60, frac in 0.01f64..0.99, seed in any::<u64>()) {
            let ds = numbered(n);
            let (tr, te) = train_test_split(&ds, frac, seed).unwrap();
            let mut ids: Vec<i64> = tr.rows().iter().chain(te.rows()).map(|r| r[0] as i64).collect();
            ids.sort();
            prop_assert_eq!(ids, (0..n as i64).collect::<Vec<_>>());
        }
    }

    fn toy() -> TabularDataset {
        let text = "age,sex,income,label\n30,m,10,yes\n40,f,20,no\n50,f,30,yes\n";
        read_csv(text.as_bytes(), &toy_schema(), CsvOptions::default()).unwrap()
    }

    #[test]
    fn drop_features_projects_columns() {
        let ds = toy();
        let empty: [&str; 0] = [];
        assert_eq!(drop_features(&ds, &empty).unwrap(), ds);
        let d = drop_features(&ds, &["sex"]).unwrap();
        assert_eq!(d.schema().names(), vec!["age", "income"]);
        assert_eq!(d.row(1), &[40.0, 20.0]);
        assert_eq!(ds.n_features(), 3);
        assert!(matches!(drop_features(&ds, &["zip"]), Err(Error::UnknownFeature(_))));
        assert!(drop_features(&ds, &["age", "sex", "income"]).is_err());
    }

    #[test]
    fn drop_features_composes() {
        let ds = toy();
        let both = drop_features(&ds, &["age", "sex"]).unwrap();
        let seq = drop_features(&drop_features(&ds, &["age"]).unwrap(), &["sex"]).unwrap();
        assert_eq!(both, seq);
    }

    #[test]
    fn csv_round_trip() {
        let ds = toy();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        ds.write_csv(&path, "no").unwrap();
        let back = load_csv(&path, &toy_schema(), CsvOptions::default()).unwrap();
        assert_eq!(back, ds);
    }
}
