//! Tabular data: records, datasets, CSV ingestion, splits and priors.

mod schema;

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use schema::{
    bin_token, bin_value, Attribute, AttributeKind, AttributeSchema, Binning, Role, DEFAULT_BINS,
};

/// One cell. Categorical values are indices into the attribute's domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Missing,
    Cat(u32),
    Num(f64),
}

impl Value {
    pub fn is_missing(self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_cat(self) -> Option<u32> {
        match self {
            Value::Cat(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub values: Vec<Value>,
}

impl Record {
    pub fn new(values: Vec<Value>) -> Record {
        Record { values }
    }

    pub fn get(&self, attribute: usize) -> Value {
        self.values[attribute]
    }

    pub fn set(&mut self, attribute: usize, value: Value) {
        self.values[attribute] = value;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub schema: AttributeSchema,
    pub records: Vec<Record>,
}

impl Dataset {
    /// Builds a dataset, checking every record against the (resolved) schema.
    pub fn new(name: impl Into<String>, schema: AttributeSchema, records: Vec<Record>) -> Result<Dataset> {
        schema.validate_resolved()?;
        for (row, record) in records.iter().enumerate() {
            check_record(&schema, record).map_err(|e| match e {
                Error::InvalidArgument(message) => Error::Parse { row: row + 1, message },
                other => other,
            })?;
        }
        Ok(Dataset {
            name: name.into(),
            schema,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn with_records(&self, records: Vec<Record>) -> Dataset {
        Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            records,
        }
    }

    /// Human-readable token for a cell.
    pub fn token(&self, attribute: usize, value: Value) -> String {
        let attr = &self.schema.attributes[attribute];
        match value {
            Value::Missing => String::new(),
            Value::Cat(c) => attr
                .domain()
                .and_then(|d| d.get(c as usize).cloned())
                .unwrap_or_else(|| c.to_string()),
            Value::Num(x) => format!("{x}"),
        }
    }

    /// Categorical value (or fitted bin) of a cell.
    pub fn category(&self, record: &Record, attribute: usize) -> Option<u32> {
        match record.get(attribute) {
            Value::Cat(c) => Some(c),
            Value::Num(x) => self.schema.attributes[attribute]
                .binning()
                .map(|b| b.bin_of(x) as u32),
            Value::Missing => None,
        }
    }

    /// Fits quantile bins for every continuous attribute on this dataset and
    /// returns a copy whose schema carries the fitted binnings.
    pub fn fit_binning(&self) -> Result<Dataset> {
        let mut schema = self.schema.clone();
        for (i, attr) in schema.attributes.iter_mut().enumerate() {
            if let AttributeKind::Continuous { bins, binning } = &mut attr.kind {
                let values: Vec<f64> = self
                    .records
                    .iter()
                    .filter_map(|r| match r.get(i) {
                        Value::Num(x) => Some(x),
                        _ => None,
                    })
                    .collect();
                if values.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "attribute `{}` has no numeric values to fit bins on",
                        attr.name
                    )));
                }
                *binning = Some(Binning::fit(&values, *bins)?);
            }
        }
        Ok(Dataset {
            schema,
            ..self.clone()
        })
    }

    /// Replaces this dataset's schema binnings with those of `schema`
    /// (bins fitted on the training split are applied to the holdout).
    pub fn with_binning_from(&self, fitted: &AttributeSchema) -> Result<Dataset> {
        if fitted.len() != self.schema.len() {
            return Err(Error::InvalidArgument("schemas differ in length".into()));
        }
        let mut schema = self.schema.clone();
        for (mine, theirs) in schema.attributes.iter_mut().zip(&fitted.attributes) {
            if mine.name != theirs.name {
                return Err(Error::InvalidArgument(format!(
                    "schema mismatch: `{}` vs `{}`",
                    mine.name, theirs.name
                )));
            }
            if let (
                AttributeKind::Continuous { binning, .. },
                AttributeKind::Continuous {
                    binning: fitted_binning,
                    ..
                },
            ) = (&mut mine.kind, &theirs.kind)
            {
                binning.clone_from(fitted_binning);
            }
        }
        Ok(Dataset {
            schema,
            ..self.clone()
        })
    }

    /// Turns a binned continuous attribute into a categorical one whose
    /// domain is the bin tokens.
    pub fn discretize(&self, attribute: &str) -> Result<Dataset> {
        let idx = self.schema.index(attribute)?;
        let binning = self.schema.attributes[idx]
            .binning()
            .cloned()
            .ok_or_else(|| {
                Error::InvalidArgument(format!("binning for `{attribute}` has not been fitted"))
            })?;
        let mut schema = self.schema.clone();
        schema.attributes[idx].kind = AttributeKind::Categorical {
            domain: binning.tokens(),
        };
        let records = self
            .records
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if let Value::Num(x) = r.get(idx) {
                    r.set(idx, Value::Cat(binning.bin_of(x) as u32));
                }
                r
            })
            .collect();
        Dataset::new(self.name.clone(), schema, records)
    }
}

fn check_record(schema: &AttributeSchema, record: &Record) -> Result<()> {
    if record.len() != schema.len() {
        return Err(Error::InvalidArgument(format!(
            "record has {} values, schema has {} attributes",
            record.len(),
            schema.len()
        )));
    }
    for (attr, value) in schema.attributes.iter().zip(&record.values) {
        match (&attr.kind, value) {
            (_, Value::Missing) => {}
            (AttributeKind::Categorical { domain }, Value::Cat(c)) => {
                if *c as usize >= domain.len() {
                    return Err(Error::SchemaViolation {
                        attribute: attr.name.clone(),
                        token: c.to_string(),
                    });
                }
            }
            (AttributeKind::Continuous { .. }, Value::Num(_)) => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "value kind does not match attribute `{}`",
                    attr.name
                )))
            }
        }
    }
    Ok(())
}

/// Reads a headed CSV file. Columns may appear in any order; empty cells
/// become [`Value::Missing`]. Categorical attributes without a declared
/// domain get one inferred from the data.
pub fn load_csv(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, schema, name)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &AttributeSchema, name: String) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let header_names: Vec<&str> = headers.iter().map(str::trim).collect();
    let mut column_of = Vec::with_capacity(schema.len());
    for attr in &schema.attributes {
        let pos = header_names
            .iter()
            .position(|h| *h == attr.name)
            .ok_or_else(|| Error::Schema(format!("CSV header lacks attribute `{}`", attr.name)))?;
        column_of.push(pos);
    }
    let known: BTreeSet<&str> = schema.attributes.iter().map(|a| a.name.as_str()).collect();
    if let Some(extra) = header_names.iter().find(|h| !known.contains(*h)) {
        return Err(Error::Schema(format!("CSV column `{extra}` is not in the schema")));
    }

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        if row.len() != header_names.len() {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected {} fields, found {}", header_names.len(), row.len()),
            });
        }
        raw_rows.push(column_of.iter().map(|&c| row[c].trim().to_string()).collect());
    }

    let mut resolved = schema.clone();
    for (j, attr) in resolved.attributes.iter_mut().enumerate() {
        if let AttributeKind::Categorical { domain } = &mut attr.kind {
            if domain.is_empty() {
                let seen: BTreeSet<&str> = raw_rows
                    .iter()
                    .map(|r| r[j].as_str())
                    .filter(|s| !s.is_empty())
                    .collect();
                *domain = seen.into_iter().map(str::to_string).collect();
            }
        }
    }
    resolved.validate_resolved()?;

    let mut records = Vec::with_capacity(raw_rows.len());
    for (i, row) in raw_rows.iter().enumerate() {
        let mut values = Vec::with_capacity(row.len());
        for (attr, cell) in resolved.attributes.iter().zip(row) {
            if cell.is_empty() {
                values.push(Value::Missing);
                continue;
            }
            let value = match &attr.kind {
                AttributeKind::Categorical { .. } => {
                    Value::Cat(attr.index_of(cell).ok_or_else(|| Error::SchemaViolation {
                        attribute: attr.name.clone(),
                        token: cell.clone(),
                    })?)
                }
                AttributeKind::Continuous { .. } => {
                    let x: f64 = cell.parse().map_err(|_| Error::Parse {
                        row: i + 1,
                        message: format!("`{cell}` is not numeric (attribute `{}`)", attr.name),
                    })?;
                    Value::Num(x)
                }
            };
            values.push(value);
        }
        records.push(Record::new(values));
    }
    Ok(Dataset {
        name,
        schema: resolved,
        records,
    })
}

/// Size of the first part when splitting `n` records at `fraction`.
/// Halves round down, so 0.75 of 20314 gives 15235.
pub fn train_size(n: usize, fraction: f64) -> usize {
    let exact = fraction * n as f64;
    ((exact - 0.5).ceil().max(0.0) as usize).min(n)
}

fn check_split_args(ds: &Dataset, fraction: f64) -> Result<usize> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty dataset".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {fraction} must lie in (0, 1)"
        )));
    }
    let n_train = train_size(ds.len(), fraction);
    if n_train == 0 {
        return Err(Error::InvalidArgument(
            "train fraction leaves the training split empty".into(),
        ));
    }
    Ok(n_train)
}

/// Seeded random partition into (training split, holdout split). Both
/// parts keep the original record order.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n_train = check_split_args(ds, train_fraction)?;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; ds.len()];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    Ok(partition(ds, &in_train))
}

/// Like [`split`] but draws the same fraction within every value of
/// `attribute` (records missing it form their own stratum).
pub fn split_stratified(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
    attribute: &str,
) -> Result<(Dataset, Dataset)> {
    check_split_args(ds, train_fraction)?;
    let idx = ds.schema.index(attribute)?;
    let mut strata: std::collections::BTreeMap<Option<u32>, Vec<usize>> = Default::default();
    for (i, r) in ds.records.iter().enumerate() {
        strata.entry(ds.category(r, idx)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; ds.len()];
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        let take = train_size(members.len(), train_fraction);
        for &i in &members[..take] {
            in_train[i] = true;
        }
    }
    Ok(partition(ds, &in_train))
}

fn partition(ds: &Dataset, in_train: &[bool]) -> (Dataset, Dataset) {
    let (mut train, mut hold) = (Vec::new(), Vec::new());
    for (r, &t) in ds.records.iter().zip(in_train) {
        if t {
            train.push(r.clone());
        } else {
            hold.push(r.clone());
        }
    }
    (ds.with_records(train), ds.with_records(hold))
}

/// Empirical distribution of a categorical (or binned) attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPrior {
    pub attribute: String,
    pub values: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl MarginalPrior {
    pub fn probability(&self, token: &str) -> Option<f64> {
        self.values
            .iter()
            .position(|v| v == token)
            .map(|i| self.probabilities[i])
    }

    /// Index of the most probable value; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

pub fn marginal_prior(ds: &Dataset, attribute: &str) -> Result<MarginalPrior> {
    let idx = ds.schema.index(attribute)?;
    let attr = &ds.schema.attributes[idx];
    let values: Vec<String> = match &attr.kind {
        AttributeKind::Categorical { domain } => domain.clone(),
        AttributeKind::Continuous {
            binning: Some(b), ..
        } => b.tokens(),
        AttributeKind::Continuous { binning: None, .. } => {
            return Err(Error::InvalidArgument(format!(
                "attribute `{attribute}` is continuous and has no fitted binning"
            )))
        }
    };
    let mut counts = vec![0usize; values.len()];
    for r in &ds.records {
        if let Some(c) = ds.category(r, idx) {
            counts[c as usize] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument(format!(
            "attribute `{attribute}` has no observed values"
        )));
    }
    let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(MarginalPrior {
        attribute: attribute.to_string(),
        values,
        probabilities,
    })
}

/// Records whose `attribute` equals `value`, in original order.
pub fn subgroup(ds: &Dataset, attribute: &str, value: &str) -> Result<Dataset> {
    let idx = ds.schema.index(attribute)?;
    let attr = &ds.schema.attributes[idx];
    if !attr.is_categorical() {
        return Err(Error::InvalidArgument(format!(
            "attribute `{attribute}` is not categorical"
        )));
    }
    let records = match attr.index_of(value) {
        Some(code) => ds
            .records
            .iter()
            .filter(|r| r.get(idx) == Value::Cat(code))
            .cloned()
            .collect(),
        None => Vec::new(),
    };
    Ok(ds.with_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![
            Attribute::continuous("x", Role::Nonsensitive, 4),
            Attribute::categorical("s", Role::Sensitive, &["yes", "no"]),
            Attribute::categorical("y", Role::TargetLabel, &[]),
        ])
        .unwrap()
    }

    fn load(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), &schema(), "t".into())
    }

    #[test]
    fn loads_rows_in_any_column_order() {
        let ds = load("y,s,x\na,yes,1.5\nb,no,2\na,,3\n").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.records[0].values, vec![Value::Num(1.5), Value::Cat(0), Value::Cat(0)]);
        assert_eq!(ds.records[2].get(1), Value::Missing);
        assert_eq!(ds.schema.label_domain(), ["a", "b"]);
    }

    #[test]
    fn unknown_token_is_a_schema_violation() {
        let err = load("x,s,y\n1,maybe,a\n").unwrap_err();
        match err {
            Error::SchemaViolation { attribute, token } => {
                assert_eq!(attribute, "s");
                assert_eq!(token, "maybe");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_rows_report_their_number() {
        let err = load("x,s,y\n1,yes,a\n2,no\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
        let err = load("x,s,y\n1,yes,a\nabc,no,b\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn header_must_cover_schema() {
        assert!(matches!(load("x,s\n1,yes\n"), Err(Error::Schema(_))));
        assert!(matches!(load("x,s,y,z\n1,yes,a,1\n"), Err(Error::Schema(_))));
    }

    fn numbered(n: usize) -> Dataset {
        let records = (0..n)
            .map(|i| Record::new(vec![Value::Num(i as f64), Value::Cat((i % 2) as u32), Value::Cat(0)]))
            .collect();
        let mut s = schema();
        s.attributes[2].kind = AttributeKind::Categorical {
            domain: vec!["a".into()],
        };
        Dataset::new("n", s, records).unwrap()
    }

    #[test]
    fn split_sizes_round_halves_down() {
        assert_eq!(train_size(20314, 0.75), 15235);
        assert_eq!(train_size(2, 0.5), 1);
        assert_eq!(train_size(45222, 35222.0 / 45222.0), 35222);
        let (a, b) = split(&numbered(2), 0.5, 1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
    }

    #[test]
    fn split_is_deterministic_and_a_partition() {
        let ds = numbered(101);
        let (a1, b1) = split(&ds, 0.3, 9).unwrap();
        let (a2, b2) = split(&ds, 0.3, 9).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let mut ids: Vec<f64> = a1
            .records
            .iter()
            .chain(&b1.records)
            .map(|r| match r.get(0) {
                Value::Num(x) => x,
                _ => unreachable!(),
            })
            .collect();
        ids.sort_by(f64::total_cmp);
        assert_eq!(ids, (0..101).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_empty_and_bad_fraction() {
        let empty = Dataset {
            records: vec![],
            ..numbered(1)
        };
        assert!(split(&empty, 0.5, 0).is_err());
        assert!(split(&numbered(10), 1.0, 0).is_err());
        assert!(split(&numbered(1), 0.2, 0).is_err());
    }

    #[test]
    fn stratified_split_keeps_class_fractions() {
        let ds = numbered(200);
        let (t, _) = split_stratified(&ds, 0.75, 3, "s").unwrap();
        let p = marginal_prior(&t, "s").unwrap();
        assert_eq!(t.len(), 150);
        assert!((p.probabilities[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn prior_edge_cases() {
        let ds = load("x,s,y\n1,yes,a\n").unwrap();
        let p = marginal_prior(&ds, "s").unwrap();
        assert_eq!(p.probabilities, vec![1.0, 0.0]);
        let missing = load("x,s,y\n1,,a\n").unwrap();
        assert!(marginal_prior(&missing, "s").is_err());
        assert!(marginal_prior(&ds, "x").is_err());
    }

    #[test]
    fn subgroup_filters_and_is_idempotent() {
        let ds = numbered(10);
        let yes = subgroup(&ds, "s", "yes").unwrap();
        assert_eq!(yes.len(), 5);
        assert_eq!(subgroup(&yes, "s", "yes").unwrap(), yes);
        assert!(subgroup(&ds, "s", "perhaps").unwrap().is_empty());
        assert!(subgroup(&ds, "nope", "yes").is_err());
    }

    #[test]
    fn discretize_turns_bins_into_categories() {
        let ds = numbered(100).fit_binning().unwrap();
        let d = ds.discretize("x").unwrap();
        assert_eq!(d.schema.attributes[0].domain().unwrap().len(), 4);
        assert_eq!(d.records[0].get(0), Value::Cat(0));
        assert_eq!(d.records[99].get(0), Value::Cat(3));
        assert_eq!(
            bin_value(&ds.schema, "x", 99.0).unwrap(),
            "bin3"
        );
    }
}
