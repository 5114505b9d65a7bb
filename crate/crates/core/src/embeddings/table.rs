use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Pretrained language vectors keyed by language id, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageEmbeddingTable {
    dim: usize,
    rows: Vec<(String, Vec<f64>)>,
    index: HashMap<String, usize>,
}

impl LanguageEmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_rows(
        dim: usize,
        rows: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let mut t = Self::new(dim);
        for (id, v) in rows {
            t.insert(id, v)?;
        }
        Ok(t)
    }

    pub fn insert(&mut self, id: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector for '{id}' has length {}, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "vector for '{id}' has non-finite entries"
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::Integrity(format!(
                "duplicate language '{id}' in embedding table"
            )));
        }
        self.index.insert(id.clone(), self.rows.len());
        self.rows.push((id, vector));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.rows[i].1.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.rows.iter().map(|(id, v)| (id.as_str(), v.as_slice()))
    }

    /// Parses `language_id<TAB>v1<TAB>...<TAB>vd` rows.
    pub fn import<R: Read>(reader: R) -> Result<Self> {
        let mut table: Option<Self> = None;
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let row = n + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields.next().unwrap().to_owned();
            let vector = fields
                .enumerate()
                .map(|(c, s)| {
                    s.trim().parse::<f64>().map_err(|_| {
                        Error::parse(
                            Some(row),
                            Some(&format!("v{}", c + 1)),
                            format!("'{s}' is not a number"),
                        )
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.is_empty() {
                return Err(Error::parse(
                    Some(row),
                    None,
                    "row has no vector components",
                ));
            }
            let t = table.get_or_insert_with(|| Self::new(vector.len()));
            t.insert(id, vector)?;
        }
        table.ok_or_else(|| Error::Format("embedding table is empty".into()))
    }

    /// Writes rows using the shortest representation that parses back exactly.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        for (id, v) in &self.rows {
            write!(out, "{id}")?;
            for x in v {
                write!(out, "\t{x:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
