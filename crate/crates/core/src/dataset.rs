//! Tabular datasets encoded as fixed-width bitstrings.
//!
//! A row is laid out as `prefix ‖ attr_1 ‖ … ‖ attr_k`. Character `j` of the
//! row bitstring is qubit `j`, stored in bit `j` of the row's `u128` index.
//! Within the prefix and within each attribute the first character is the
//! most significant bit of the code.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Widest row (prefix plus payload) the simulator can address.
pub const MAX_ROW_BITS: usize = 96;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub width: usize,
    /// `(label, code)` pairs sorted by code. `None` means every `width`-bit code is valid.
    pub labels: Option<Vec<(String, u64)>>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, width: usize) -> Self {
        Attribute { name: name.into(), width, labels: None }
    }

    pub fn with_labels<S: Into<String>>(
        name: impl Into<String>,
        width: usize,
        labels: impl IntoIterator<Item = (S, u64)>,
    ) -> Self {
        let mut labels: Vec<(String, u64)> =
            labels.into_iter().map(|(l, c)| (l.into(), c)).collect();
        labels.sort_by_key(|(_, c)| *c);
        Attribute { name: name.into(), width, labels: Some(labels) }
    }

    pub fn max_code(&self) -> u64 {
        if self.width >= 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    pub fn code_of(&self, label: &str) -> Option<u64> {
        self.labels
            .as_ref()?
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
    }

    pub fn label_of(&self, code: u64) -> Option<&str> {
        self.labels
            .as_ref()?
            .iter()
            .find(|(_, c)| *c == code)
            .map(|(l, _)| l.as_str())
    }

    /// Codes a row may carry for this attribute.
    pub fn valid_codes(&self) -> Vec<u64> {
        match &self.labels {
            Some(labels) => labels.iter().map(|(_, c)| *c).collect(),
            None => (0..=self.max_code()).collect(),
        }
    }

    /// `code` as a `width`-character binary literal.
    pub fn literal(&self, code: u64) -> String {
        format!("{:0width$b}", code, width = self.width)
    }

    /// Resolves a label, a binary literal of at most `width` digits, or (for
    /// unlabelled attributes) a decimal integer.
    pub fn parse_value(&self, text: &str) -> Result<u64> {
        if let Some(code) = self.code_of(text) {
            return Ok(code);
        }
        let unknown = || Error::UnknownValue { attr: self.name.clone(), cell: text.to_string() };
        if !text.is_empty() && text.bytes().all(|b| b == b'0' || b == b'1') {
            if text.len() > self.width {
                return Err(Error::WidthOverflow(self.name.clone()));
            }
            let code = u64::from_str_radix(text, 2).map_err(|_| unknown())?;
            return self.check_declared(code).ok_or_else(unknown);
        }
        if self.labels.is_none() {
            if let Ok(v) = text.parse::<u64>() {
                if v > self.max_code() {
                    return Err(Error::WidthOverflow(self.name.clone()));
                }
                return Ok(v);
            }
        }
        Err(unknown())
    }

    fn check_declared(&self, code: u64) -> Option<u64> {
        match &self.labels {
            Some(labels) => labels.iter().any(|(_, c)| *c == code).then_some(code),
            None => (code <= self.max_code()).then_some(code),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.width > 63 {
            return Err(Error::Schema(format!(
                "attribute `{}` must have width in 1..=63",
                self.name
            )));
        }
        if let Some(labels) = &self.labels {
            let mut seen = HashSet::new();
            for (label, code) in labels {
                if *code > self.max_code() {
                    return Err(Error::WidthOverflow(self.name.clone()));
                }
                if !seen.insert(*code) {
                    return Err(Error::Schema(format!(
                        "attribute `{}` assigns code {} twice (label `{}`)",
                        self.name, code, label
                    )));
                }
            }
            if labels.is_empty() {
                return Err(Error::Schema(format!("attribute `{}` declares no values", self.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub attributes: Vec<Attribute>,
    pub index_prefix_bits: usize,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let schema = Schema { attributes, index_prefix_bits: 0 };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::Schema("schema declares no attributes".into()));
        }
        let mut names = HashSet::new();
        for a in &self.attributes {
            a.validate()?;
            if !names.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", a.name)));
            }
        }
        if self.row_width() > MAX_ROW_BITS {
            return Err(Error::Schema(format!(
                "row width {} exceeds {} bits",
                self.row_width(),
                MAX_ROW_BITS
            )));
        }
        Ok(())
    }

    /// Reads a TOML schema document.
    ///
    /// ```toml
    /// [[attribute]]
    /// name = "age"
    /// width = 2
    /// values = { Child = "00", Adult = "01" }
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            #[serde(rename = "attribute")]
            attributes: Vec<AttrDoc>,
        }
        #[derive(Deserialize)]
        struct AttrDoc {
            name: String,
            width: usize,
            values: Option<BTreeMap<String, String>>,
        }
        let doc: Doc = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let mut attributes = Vec::with_capacity(doc.attributes.len());
        for a in doc.attributes {
            let attr = match a.values {
                None => Attribute::new(a.name, a.width),
                Some(values) => {
                    let mut labels = Vec::with_capacity(values.len());
                    for (label, lit) in values {
                        if lit.is_empty() || !lit.bytes().all(|b| b == b'0' || b == b'1') {
                            return Err(Error::Schema(format!(
                                "value `{label}` of `{}` must be a binary literal",
                                a.name
                            )));
                        }
                        if lit.len() > a.width {
                            return Err(Error::WidthOverflow(a.name.clone()));
                        }
                        let code = u64::from_str_radix(&lit, 2)
                            .map_err(|e| Error::Schema(e.to_string()))?;
                        labels.push((label, code));
                    }
                    Attribute::with_labels(a.name, a.width, labels)
                }
            };
            attributes.push(attr);
        }
        Schema::new(attributes)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        Schema::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn payload_width(&self) -> usize {
        self.attributes.iter().map(|a| a.width).sum()
    }

    /// Total row width m.
    pub fn row_width(&self) -> usize {
        self.index_prefix_bits + self.payload_width()
    }

    pub fn attribute(&self, name: &str) -> Option<(usize, &Attribute)> {
        self.attributes.iter().enumerate().find(|(_, a)| a.name == name)
    }

    /// First qubit of attribute `idx`.
    pub fn offset(&self, idx: usize) -> usize {
        self.index_prefix_bits + self.attributes[..idx].iter().map(|a| a.width).sum::<usize>()
    }

    /// Reads attribute `idx`'s code out of a row.
    pub fn extract(&self, row: u128, idx: usize) -> u64 {
        read_field(row, self.offset(idx), self.attributes[idx].width)
    }

    /// Builds a row from the index `i` and per-attribute codes.
    pub fn assemble(&self, index: u64, codes: &[u64]) -> u128 {
        let mut row = write_field(0, 0, self.index_prefix_bits, index);
        for (k, code) in codes.iter().enumerate() {
            row = write_field(row, self.offset(k), self.attributes[k].width, *code);
        }
        row
    }

    /// Every payload (tuple of codes) a row may carry, in lexicographic code order.
    pub fn valid_payloads(&self) -> Vec<Vec<u64>> {
        let mut out = vec![Vec::new()];
        for a in &self.attributes {
            let codes = a.valid_codes();
            out = out
                .into_iter()
                .flat_map(|p| {
                    codes.iter().map(move |c| {
                        let mut q = p.clone();
                        q.push(*c);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Reads a `width`-bit field starting at qubit `offset`, first qubit most significant.
pub fn read_field(row: u128, offset: usize, width: usize) -> u64 {
    (0..width).fold(0u64, |acc, j| (acc << 1) | ((row >> (offset + j)) & 1) as u64)
}

pub fn write_field(mut row: u128, offset: usize, width: usize, value: u64) -> u128 {
    for j in 0..width {
        let bit = (value >> (width - 1 - j)) & 1;
        let q = offset + j;
        row = (row & !(1u128 << q)) | ((bit as u128) << q);
    }
    row
}

/// Formats the low `width` qubits of `index` as a bitstring, qubit 0 first.
pub fn bitstring(index: u128, width: usize) -> String {
    (0..width).map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Number of prefix bits needed to index `n` rows.
pub fn prefix_bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// An immutable dataset of `n` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: Schema,
    payloads: Vec<Vec<u64>>,
    rows: Vec<u128>,
}

impl Dataset {
    /// Builds a dataset with the index prefix enabled.
    pub fn new(schema: Schema, payloads: Vec<Vec<u64>>) -> Result<Self> {
        Dataset::with_prefix(schema, payloads, true)
    }

    pub fn with_prefix(mut schema: Schema, payloads: Vec<Vec<u64>>, prefix: bool) -> Result<Self> {
        if payloads.is_empty() {
            return Err(Error::EmptyDataset);
        }
        schema.index_prefix_bits = if prefix { prefix_bits_for(payloads.len()) } else { 0 };
        if schema.row_width() > MAX_ROW_BITS {
            return Err(Error::Schema(format!(
                "row width {} exceeds {} bits",
                schema.row_width(),
                MAX_ROW_BITS
            )));
        }
        for p in &payloads {
            if p.len() != schema.attributes.len() {
                return Err(Error::DimensionMismatch(format!(
                    "row has {} values, schema has {} attributes",
                    p.len(),
                    schema.attributes.len()
                )));
            }
            for (a, code) in schema.attributes.iter().zip(p) {
                if *code > a.max_code() {
                    return Err(Error::WidthOverflow(a.name.clone()));
                }
                if a.check_declared(*code).is_none() {
                    return Err(Error::UnknownValue { attr: a.name.clone(), cell: a.literal(*code) });
                }
            }
        }
        let rows = payloads
            .iter()
            .enumerate()
            .map(|(i, p)| schema.assemble(i as u64, p))
            .collect();
        Ok(Dataset { schema, payloads, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Row width m including the index prefix.
    pub fn width(&self) -> usize {
        self.schema.row_width()
    }

    pub fn rows(&self) -> &[u128] {
        &self.rows
    }

    pub fn payloads(&self) -> &[Vec<u64>] {
        &self.payloads
    }

    pub fn row_string(&self, i: usize) -> String {
        bitstring(self.rows[i], self.width())
    }

    pub fn has_prefix(&self) -> bool {
        self.schema.index_prefix_bits > 0 || self.n() == 1
    }

    /// Maps row `i` back to its cell strings (labels where declared).
    pub fn decode_row(&self, i: usize) -> Vec<String> {
        self.schema
            .attributes
            .iter()
            .zip(&self.payloads[i])
            .map(|(a, c)| a.label_of(*c).map(str::to_string).unwrap_or_else(|| a.literal(*c)))
            .collect()
    }

    /// Copy with row `i`'s payload replaced.
    pub fn substitute(&self, i: usize, payload: Vec<u64>) -> Dataset {
        let mut payloads = self.payloads.clone();
        let mut rows = self.rows.clone();
        rows[i] = self.schema.assemble(i as u64, &payload);
        payloads[i] = payload;
        Dataset { schema: self.schema.clone(), payloads, rows }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n() {
            writeln!(f, "{}", self.row_string(i))?;
        }
        Ok(())
    }
}

/// Loads a CSV file (header row of attribute names) with the index prefix enabled.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    load_dataset_with(path, schema, true)
}

pub fn load_dataset_with(path: impl AsRef<Path>, schema: &Schema, prefix: bool) -> Result<Dataset> {
    let reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    read_dataset(reader, schema, prefix)
}

pub fn read_dataset<R: std::io::Read>(
    mut reader: csv::Reader<R>,
    schema: &Schema,
    prefix: bool,
) -> Result<Dataset> {
    let headers = reader.headers()?.clone();
    let columns: Vec<usize> = schema
        .attributes
        .iter()
        .map(|a| {
            headers
                .iter()
                .position(|h| h == a.name)
                .ok_or_else(|| Error::Schema(format!("CSV has no column `{}`", a.name)))
        })
        .collect::<Result<_>>()?;
    let mut payloads = Vec::new();
    for record in reader.records() {
        let record = record?;
        let payload = schema
            .attributes
            .iter()
            .zip(&columns)
            .map(|(a, &col)| a.parse_value(record.get(col).unwrap_or("")))
            .collect::<Result<Vec<_>>>()?;
        payloads.push(payload);
    }
    Dataset::with_prefix(schema.clone(), payloads, prefix)
}

/// Every neighbour of `d` under fixed-n one-row substitution.
pub fn neighbors(d: &Dataset) -> Neighbors<'_> {
    Neighbors { base: d, candidates: d.schema.valid_payloads(), row: 0, next: 0 }
}

pub struct Neighbors<'a> {
    base: &'a Dataset,
    candidates: Vec<Vec<u64>>,
    row: usize,
    next: usize,
}

impl Iterator for Neighbors<'_> {
    type Item = Dataset;

    fn next(&mut self) -> Option<Dataset> {
        while self.row < self.base.n() {
            while self.next < self.candidates.len() {
                let cand = &self.candidates[self.next];
                self.next += 1;
                if *cand != self.base.payloads[self.row] {
                    return Some(self.base.substitute(self.row, cand.clone()));
                }
            }
            self.row += 1;
            self.next = 0;
        }
        None
    }
}
