//! In-memory typological knowledge base and its on-disk formats.
//!
//! Two input formats are supported:
//!
//! * the WALS "wide" export (`language.csv`): one row per language, metadata
//!   columns followed by one column per feature named `"<id> <name>"`, with
//!   cells of the form `"<value_id> <value_name>"` or empty;
//! * the canonical long format written by [`save_long`]:
//!
//! ```text
//! #languages
//! <id>\t<name>\t<genus>\t<family>\t<macroarea>
//! #features
//! <id>\t<name>\t<area>
//! #values
//! <feature_id>\t<value_id>\t<value_name>
//! #cells
//! <language_id>\t<feature_id>\t<value_id>
//! ```
//!
//! Sections appear exactly once and in this order. Rows carry no header line.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Placeholder for missing language metadata.
pub const UNKNOWN: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Language {
    pub id: String,
    pub name: String,
    /// WALS genus; the unit held out in branch experiments.
    pub genus: String,
    pub family: String,
    pub macroarea: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureValue {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub id: String,
    pub name: String,
    pub area: String,
    /// Sorted by strictly increasing value id.
    pub values: Vec<FeatureValue>,
}

impl Feature {
    pub fn value_position(&self, value_id: u32) -> Option<usize> {
        self.values.binary_search_by_key(&value_id, |v| v.id).ok()
    }

    pub fn value_name(&self, value_id: u32) -> Option<&str> {
        self.value_position(value_id)
            .map(|p| self.values[p].name.as_str())
    }
}

/// A cell as seen from outside: `(language_id, feature_id, value_id)`.
pub type CellRef<'a> = (&'a str, &'a str, u32);

/// Languages, features and the observed `(language, feature) -> value` cells.
///
/// Immutable once built; every constructor validates referential integrity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypologicalKb {
    languages: Vec<Language>,
    features: Vec<Feature>,
    cells: BTreeMap<(usize, usize), u32>,
    lang_index: HashMap<String, usize>,
    feat_index: HashMap<String, usize>,
}

fn normalize_meta(s: &str) -> String {
    let t = s.trim();
    if t.is_empty() {
        UNKNOWN.to_owned()
    } else {
        t.to_owned()
    }
}

impl TypologicalKb {
    /// Builds a KB from owned parts, normalizing empty metadata to `"unknown"`.
    pub fn new<I, S1, S2>(
        languages: Vec<Language>,
        features: Vec<Feature>,
        cells: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (S1, S2, u32)>,
        S1: AsRef<str>,
        S2: AsRef<str>,
    {
        let mut kb = Self::from_parts(languages, features, BTreeMap::new())?;
        for (lang, feat, value) in cells {
            let (lang, feat) = (lang.as_ref(), feat.as_ref());
            let li = kb.language_index(lang).ok_or_else(|| {
                Error::Integrity(format!("cell references unknown language '{lang}'"))
            })?;
            let fi = kb.feature_index(feat).ok_or_else(|| {
                Error::Integrity(format!("cell references unknown feature '{feat}'"))
            })?;
            if kb.features[fi].value_position(value).is_none() {
                return Err(Error::Integrity(format!(
                    "cell ({lang}, {feat}) references unknown value {value}"
                )));
            }
            if kb.cells.insert((li, fi), value).is_some() {
                return Err(Error::Integrity(format!("duplicate cell ({lang}, {feat})")));
            }
        }
        Ok(kb)
    }

    fn from_parts(
        mut languages: Vec<Language>,
        features: Vec<Feature>,
        cells: BTreeMap<(usize, usize), u32>,
    ) -> Result<Self> {
        let mut lang_index = HashMap::with_capacity(languages.len());
        for (i, l) in languages.iter_mut().enumerate() {
            if l.id.trim().is_empty() {
                return Err(Error::Integrity(format!("language #{i} has an empty id")));
            }
            l.genus = normalize_meta(&l.genus);
            l.family = normalize_meta(&l.family);
            l.macroarea = normalize_meta(&l.macroarea);
            if lang_index.insert(l.id.clone(), i).is_some() {
                return Err(Error::Integrity(format!(
                    "duplicate language id '{}'",
                    l.id
                )));
            }
        }
        let mut feat_index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if f.id.trim().is_empty() {
                return Err(Error::Integrity(format!("feature #{i} has an empty id")));
            }
            if f.values.is_empty() {
                return Err(Error::Integrity(format!(
                    "feature '{}' has no values",
                    f.id
                )));
            }
            if f.values[0].id == 0 || f.values.windows(2).any(|w| w[0].id >= w[1].id) {
                return Err(Error::Integrity(format!(
                    "feature '{}' values must be positive and strictly increasing",
                    f.id
                )));
            }
            if feat_index.insert(f.id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate feature id '{}'", f.id)));
            }
        }
        Ok(Self {
            languages,
            features,
            cells,
            lang_index,
            feat_index,
        })
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn language_index(&self, id: &str) -> Option<usize> {
        self.lang_index.get(id).copied()
    }

    pub fn feature_index(&self, id: &str) -> Option<usize> {
        self.feat_index.get(id).copied()
    }

    pub fn language(&self, id: &str) -> Option<&Language> {
        self.language_index(id).map(|i| &self.languages[i])
    }

    pub fn feature(&self, id: &str) -> Option<&Feature> {
        self.feature_index(id).map(|i| &self.features[i])
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Observed value for a `(language_id, feature_id)` pair.
    pub fn value(&self, language: &str, feature: &str) -> Option<u32> {
        let li = self.language_index(language)?;
        let fi = self.feature_index(feature)?;
        self.cells.get(&(li, fi)).copied()
    }

    pub fn value_at(&self, language: usize, feature: usize) -> Option<u32> {
        self.cells.get(&(language, feature)).copied()
    }

    /// Cells as `(language index, feature index, value id)`, ordered by language then feature.
    pub fn indexed_cells(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.cells.iter().map(|(&(l, f), &v)| (l, f, v))
    }

    pub fn cells(&self) -> impl Iterator<Item = CellRef<'_>> + '_ {
        self.indexed_cells().map(|(l, f, v)| {
            (
                self.languages[l].id.as_str(),
                self.features[f].id.as_str(),
                v,
            )
        })
    }

    /// Sorted list of distinct genera.
    pub fn genera(&self) -> Vec<&str> {
        let mut g: Vec<&str> = self.languages.iter().map(|l| l.genus.as_str()).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Exhaustive check of every referential invariant. Empty means consistent.
    pub fn check_integrity(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        for (i, l) in self.languages.iter().enumerate() {
            if l.id.is_empty() {
                problems.push(format!("language #{i}: empty id"));
            }
            if !seen.insert(l.id.as_str()) {
                problems.push(format!("language '{}': duplicate id", l.id));
            }
            for (what, v) in [
                ("genus", &l.genus),
                ("family", &l.family),
                ("macroarea", &l.macroarea),
            ] {
                if v.is_empty() {
                    problems.push(format!("language '{}': empty {what}", l.id));
                }
            }
        }
        seen.clear();
        for f in &self.features {
            if !seen.insert(f.id.as_str()) {
                problems.push(format!("feature '{}': duplicate id", f.id));
            }
            if f.values.windows(2).any(|w| w[0].id >= w[1].id) {
                problems.push(format!(
                    "feature '{}': values not strictly increasing",
                    f.id
                ));
            }
        }
        for (&(l, f), &v) in &self.cells {
            match (self.languages.get(l), self.features.get(f)) {
                (Some(_), Some(feat)) if feat.value_position(v).is_some() => {}
                (Some(lang), Some(feat)) => problems.push(format!(
                    "cell ({}, {}): unknown value {v}",
                    lang.id, feat.id
                )),
                _ => problems.push(format!("cell ({l}, {f}): dangling index")),
            }
        }
        problems
    }
}

/// Feature id -> WALS chapter area, read from `feature_id<TAB>area` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureAreas(HashMap<String, String>);

impl FeatureAreas {
    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut map = HashMap::new();
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let t = line.trim_end_matches('\r');
            if t.trim().is_empty() || t.starts_with('#') {
                continue;
            }
            let (id, area) = t
                .split_once('\t')
                .ok_or_else(|| Error::parse(Some(n + 1), None, "expected feature_id<TAB>area"))?;
            if map
                .insert(id.trim().to_owned(), area.trim().to_owned())
                .is_some()
            {
                return Err(Error::Integrity(format!(
                    "feature '{id}' mapped twice in area file"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn area(&self, feature_id: &str) -> &str {
        self.0
            .get(feature_id)
            .map(String::as_str)
            .unwrap_or(UNKNOWN)
    }
}

fn split_feature_header(col: &str) -> Option<(&str, &str)> {
    let (id, name) = col.trim().split_once(char::is_whitespace)?;
    let digits = id.bytes().take_while(u8::is_ascii_digit).count();
    let letters = &id[digits..];
    let ok = digits > 0 && !letters.is_empty() && letters.bytes().all(|b| b.is_ascii_uppercase());
    let name = name.trim();
    (ok && !name.is_empty()).then_some((id, name))
}

enum Column {
    Id,
    Name,
    Genus,
    Family,
    Macroarea,
    Feature(usize),
    Ignored,
}

/// Loads the WALS wide export (`language.csv`).
///
/// Languages keep file order; features keep column order. Each feature's value
/// inventory is the union of values observed in its column.
pub fn load_wals_wide<R: Read>(languages: R, areas: &FeatureAreas) -> Result<TypologicalKb> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(languages);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(Some(1), None, e.to_string()))?
        .clone();

    let mut columns = Vec::with_capacity(headers.len());
    let mut features: Vec<Feature> = Vec::new();
    let mut value_names: Vec<BTreeMap<u32, String>> = Vec::new();
    let mut have_id = false;
    for col in headers.iter() {
        let key = col.trim();
        if key.is_empty() {
            return Err(Error::parse(Some(1), Some(col), "empty column name"));
        }
        let kind = match key.to_ascii_lowercase().as_str() {
            "wals_code" | "wals code" | "id" => {
                have_id = true;
                Column::Id
            }
            "name" => Column::Name,
            "genus" => Column::Genus,
            "family" => Column::Family,
            "macroarea" => Column::Macroarea,
            _ if key.as_bytes()[0].is_ascii_digit() => {
                let (id, name) = split_feature_header(key).ok_or_else(|| {
                    Error::parse(
                        Some(1),
                        Some(col),
                        "feature column must be named '<id> <name>'",
                    )
                })?;
                if features.iter().any(|f| f.id == id) {
                    return Err(Error::parse(
                        Some(1),
                        Some(col),
                        format!("duplicate feature '{id}'"),
                    ));
                }
                features.push(Feature {
                    id: id.to_owned(),
                    name: name.to_owned(),
                    area: areas.area(id).to_owned(),
                    values: Vec::new(),
                });
                value_names.push(BTreeMap::new());
                Column::Feature(features.len() - 1)
            }
            _ => Column::Ignored,
        };
        columns.push(kind);
    }
    if !have_id {
        return Err(Error::parse(
            Some(1),
            Some("wals_code"),
            "missing language id column",
        ));
    }

    let mut langs = Vec::new();
    let mut seen = HashSet::new();
    let mut cells = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 2;
        let record = record.map_err(|e| Error::parse(Some(row), None, e.to_string()))?;
        let mut lang = Language {
            id: String::new(),
            name: String::new(),
            genus: String::new(),
            family: String::new(),
            macroarea: String::new(),
        };
        let mut row_cells = Vec::new();
        for (c, field) in record.iter().enumerate() {
            let field = field.trim();
            match columns[c] {
                Column::Id => lang.id = field.to_owned(),
                Column::Name => lang.name = field.to_owned(),
                Column::Genus => lang.genus = field.to_owned(),
                Column::Family => lang.family = field.to_owned(),
                Column::Macroarea => lang.macroarea = field.to_owned(),
                Column::Ignored => {}
                Column::Feature(_) if field.is_empty() => {}
                Column::Feature(fi) => {
                    let (vid, vname) = field.split_once(char::is_whitespace).unwrap_or((field, ""));
                    let vid: u32 = vid.parse().ok().filter(|&v| v > 0).ok_or_else(|| {
                        Error::parse(
                            Some(row),
                            Some(&headers[c]),
                            format!("bad value id in '{field}'"),
                        )
                    })?;
                    let vname = vname.trim();
                    match value_names[fi].get(&vid) {
                        Some(prev) if prev != vname => {
                            return Err(Error::Integrity(format!(
                                "feature '{}' value {vid} named both '{prev}' and '{vname}'",
                                features[fi].id
                            )))
                        }
                        Some(_) => {}
                        None => {
                            value_names[fi].insert(vid, vname.to_owned());
                        }
                    }
                    row_cells.push((fi, vid));
                }
            }
        }
        if lang.id.is_empty() {
            return Err(Error::parse(
                Some(row),
                Some(&headers[0]),
                "empty language id",
            ));
        }
        if !seen.insert(lang.id.clone()) {
            return Err(Error::Integrity(format!(
                "duplicate language id '{}'",
                lang.id
            )));
        }
        for (fi, vid) in row_cells {
            cells.push((lang.id.clone(), features[fi].id.clone(), vid));
        }
        langs.push(lang);
    }

    // Features never observed get no values; they cannot be represented, so drop them.
    let mut kept = Vec::with_capacity(features.len());
    for (mut f, names) in features.into_iter().zip(value_names) {
        if names.is_empty() {
            continue;
        }
        f.values = names
            .into_iter()
            .map(|(id, name)| FeatureValue { id, name })
            .collect();
        kept.push(f);
    }
    TypologicalKb::new(langs, kept, cells)
}

fn check_field(s: &str) -> Result<&str> {
    if s.contains(['\t', '\n', '\r']) {
        Err(Error::InvalidArgument(format!(
            "field {s:?} contains a tab or newline"
        )))
    } else {
        Ok(s)
    }
}

/// Writes the canonical long format.
pub fn save_long<W: Write>(kb: &TypologicalKb, mut out: W) -> Result<()> {
    writeln!(out, "#languages")?;
    for l in &kb.languages {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            check_field(&l.id)?,
            check_field(&l.name)?,
            check_field(&l.genus)?,
            check_field(&l.family)?,
            check_field(&l.macroarea)?
        )?;
    }
    writeln!(out, "#features")?;
    for f in &kb.features {
        writeln!(
            out,
            "{}\t{}\t{}",
            check_field(&f.id)?,
            check_field(&f.name)?,
            check_field(&f.area)?
        )?;
    }
    writeln!(out, "#values")?;
    for f in &kb.features {
        for v in &f.values {
            writeln!(out, "{}\t{}\t{}", f.id, v.id, check_field(&v.name)?)?;
        }
    }
    writeln!(out, "#cells")?;
    for (l, f, v) in kb.cells() {
        writeln!(out, "{l}\t{f}\t{v}")?;
    }
    Ok(())
}

/// Reads the canonical long format written by [`save_long`].
pub fn load_long<R: Read>(reader: R) -> Result<TypologicalKb> {
    const SECTIONS: [&str; 4] = ["#languages", "#features", "#values", "#cells"];
    let mut section: Option<usize> = None;
    let mut languages = Vec::new();
    let mut features: Vec<Feature> = Vec::new();
    let mut feat_pos: HashMap<String, usize> = HashMap::new();
    let mut cells = Vec::new();

    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let row = n + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if let Some(s) = SECTIONS.iter().position(|&h| h == line) {
            let expected = section.map_or(0, |c| c + 1);
            if s != expected {
                return Err(Error::parse(
                    Some(row),
                    None,
                    format!("section {line} out of order"),
                ));
            }
            section = Some(s);
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let want = match section {
            None => {
                return Err(Error::parse(
                    Some(row),
                    None,
                    "data before first section header",
                ))
            }
            Some(0) => 5,
            Some(_) => 3,
        };
        if fields.len() != want {
            return Err(Error::parse(
                Some(row),
                None,
                format!(
                    "expected {want} tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        match section {
            Some(0) => languages.push(Language {
                id: fields[0].to_owned(),
                name: fields[1].to_owned(),
                genus: fields[2].to_owned(),
                family: fields[3].to_owned(),
                macroarea: fields[4].to_owned(),
            }),
            Some(1) => {
                feat_pos.insert(fields[0].to_owned(), features.len());
                features.push(Feature {
                    id: fields[0].to_owned(),
                    name: fields[1].to_owned(),
                    area: fields[2].to_owned(),
                    values: Vec::new(),
                });
            }
            Some(2) => {
                let fi = *feat_pos.get(fields[0]).ok_or_else(|| {
                    Error::Integrity(format!(
                        "value row {row} references unknown feature '{}'",
                        fields[0]
                    ))
                })?;
                let id = parse_value_id(fields[1], row)?;
                let values = &mut features[fi].values;
                if values.iter().any(|v| v.id == id) {
                    return Err(Error::Integrity(format!(
                        "duplicate value {id} for feature '{}'",
                        fields[0]
                    )));
                }
                values.push(FeatureValue {
                    id,
                    name: fields[2].to_owned(),
                });
            }
            _ => cells.push((
                fields[0].to_owned(),
                fields[1].to_owned(),
                parse_value_id(fields[2], row)?,
            )),
        }
    }
    for f in &mut features {
        f.values.sort_by_key(|v| v.id);
    }
    TypologicalKb::new(languages, features, cells)
}

fn parse_value_id(s: &str, row: usize) -> Result<u32> {
    s.parse::<u32>().ok().filter(|&v| v > 0).ok_or_else(|| {
        Error::parse(
            Some(row),
            Some("value_id"),
            format!("'{s}' is not a positive integer"),
        )
    })
}

/// Thresholds for [`filter_kb`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterThresholds {
    /// Minimum number of languages a feature value must be observed in.
    pub min_value_count: usize,
    /// Minimum number of observed features per language.
    pub min_features_per_language: usize,
    /// Genera with this many languages or fewer are dropped.
    pub min_branch_size: usize,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            min_value_count: 10,
            min_features_per_language: 10,
            min_branch_size: 4,
        }
    }
}

impl FilterThresholds {
    pub const NONE: Self = Self {
        min_value_count: 0,
        min_features_per_language: 0,
        min_branch_size: 0,
    };
}

/// Single pass of: rare values, then sparse languages, then small genera.
///
/// Features left with fewer than two values after the first step are removed.
/// No fixpoint iteration: later steps can push value counts back under the
/// threshold, and those values are kept.
pub fn filter_kb(kb: &TypologicalKb, t: FilterThresholds) -> TypologicalKb {
    // 1. values
    let mut counts: HashMap<(usize, u32), usize> = HashMap::new();
    for (_, f, v) in kb.indexed_cells() {
        *counts.entry((f, v)).or_default() += 1;
    }
    let mut features = Vec::new();
    let mut feat_map = vec![None; kb.features.len()];
    for (fi, f) in kb.features.iter().enumerate() {
        let values: Vec<FeatureValue> = f
            .values
            .iter()
            .filter(|v| counts.get(&(fi, v.id)).copied().unwrap_or(0) >= t.min_value_count)
            .cloned()
            .collect();
        if values.len() >= 2 {
            feat_map[fi] = Some(features.len());
            features.push(Feature {
                values,
                ..f.clone()
            });
        }
    }
    let surviving = |f: usize, v: u32| -> Option<usize> {
        let nf = feat_map[f]?;
        features[nf].value_position(v).map(|_| nf)
    };

    // 2. languages
    let mut per_lang = vec![0usize; kb.languages.len()];
    for (l, f, v) in kb.indexed_cells() {
        if surviving(f, v).is_some() {
            per_lang[l] += 1;
        }
    }
    let keep_lang: Vec<bool> = per_lang
        .iter()
        .map(|&n| n >= t.min_features_per_language)
        .collect();

    // 3. branches
    let mut genus_size: HashMap<&str, usize> = HashMap::new();
    for (l, lang) in kb.languages.iter().enumerate() {
        if keep_lang[l] {
            *genus_size.entry(lang.genus.as_str()).or_default() += 1;
        }
    }
    let mut languages = Vec::new();
    let mut lang_map = vec![None; kb.languages.len()];
    for (l, lang) in kb.languages.iter().enumerate() {
        if keep_lang[l] && genus_size[lang.genus.as_str()] > t.min_branch_size {
            lang_map[l] = Some(languages.len());
            languages.push(lang.clone());
        }
    }

    let mut cells = BTreeMap::new();
    for (l, f, v) in kb.indexed_cells() {
        if let (Some(nl), Some(nf)) = (lang_map[l], surviving(f, v)) {
            cells.insert((nl, nf), v);
        }
    }
    TypologicalKb::from_parts(languages, features, cells)
        .expect("filtering preserves KB invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    const WIDE: &str = "\
wals_code,iso_code,Name,latitude,genus,family,macroarea,81A Order of Subject Object and Verb,26A Prefixing vs Suffixing
eng,eng,English,52,Germanic,Indo-European,Eurasia,2 SVO,2 Strongly suffixing
nld,nld,Dutch,52,Germanic,Indo-European,Eurasia,,2 Strongly suffixing
jpn,jpn,Japanese,35,Japanese,Japanese,,1 SOV,2 Strongly suffixing
";

    fn areas() -> FeatureAreas {
        FeatureAreas::parse("81A\tWord Order\n26A\tMorphology\n".as_bytes()).unwrap()
    }

    #[test]
    fn wide_parses_cells_and_metadata() {
        let kb = load_wals_wide(WIDE.as_bytes(), &areas()).unwrap();
        assert_eq!(kb.value("eng", "81A"), Some(2));
        assert_eq!(kb.value("nld", "81A"), None);
        assert_eq!(kb.language("jpn").unwrap().macroarea, UNKNOWN);
        let f = kb.feature("81A").unwrap();
        assert_eq!(f.area, "Word Order");
        assert_eq!(f.name, "Order of Subject Object and Verb");
        assert_eq!(
            f.values.iter().map(|v| v.id).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(f.value_name(2), Some("SVO"));
        assert_eq!(kb.n_cells(), 5);
        assert!(kb.check_integrity().is_empty());
    }

    #[test]
    fn wide_keeps_languages_without_cells() {
        let src = "wals_code,Name,genus,family,macroarea,81A Order\nxyz,X,G,F,Africa,\nabc,A,G,F,Africa,1 SOV\n";
        let kb = load_wals_wide(src.as_bytes(), &FeatureAreas::default()).unwrap();
        assert_eq!(kb.languages().len(), 2);
        assert_eq!(kb.feature("81A").unwrap().area, UNKNOWN);
    }

    #[test]
    fn wide_rejects_duplicate_language() {
        let src = format!("{WIDE}eng,eng,English,52,Germanic,Indo-European,Eurasia,2 SVO,\n");
        assert!(matches!(
            load_wals_wide(src.as_bytes(), &areas()),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn wide_rejects_bad_value_id() {
        let src = "wals_code,Name,81A Order\neng,English,SVO\n";
        match load_wals_wide(src.as_bytes(), &FeatureAreas::default()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, Some(2));
                assert_eq!(column.as_deref(), Some("81A Order"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let src = "wals_code,Name,81A Order\neng,English,0 Zero\n";
        assert!(matches!(
            load_wals_wide(src.as_bytes(), &FeatureAreas::default()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn wide_rejects_malformed_header() {
        let src = "wals_code,Name,81A\neng,English,2 SVO\n";
        match load_wals_wide(src.as_bytes(), &FeatureAreas::default()) {
            Err(Error::Parse { column, .. }) => assert_eq!(column.as_deref(), Some("81A")),
            other => panic!("unexpected {other:?}"),
        }
        let src = "Name,81A Order\nEnglish,2 SVO\n";
        assert!(matches!(
            load_wals_wide(src.as_bytes(), &FeatureAreas::default()),
            Err(Error::Parse { .. })
        ));
    }

    const LONG: &str = "#languages
eng\tEnglish\tGermanic\tIndo-European\tEurasia
jpn\tJapanese\tJapanese\tJapanese\tEurasia
#features
81A\tOrder of Subject, Object and Verb\tWord Order
#values
81A\t1\tSOV
81A\t2\tSVO
81A\t7\tNo dominant order
#cells
eng\t81A\t2
jpn\t81A\t1
";

    #[test]
    fn long_round_trip_is_bit_exact() {
        let kb = load_long(LONG.as_bytes()).unwrap();
        assert_eq!(kb.n_cells(), 2);
        let mut out = Vec::new();
        save_long(&kb, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), LONG);
        assert_eq!(load_long(out.as_slice()).unwrap(), kb);
    }

    #[test]
    fn long_three_cells() {
        let src = LONG.to_owned() + "eng\t81A\t7\n";
        // duplicate (eng, 81A)
        assert!(matches!(
            load_long(src.as_bytes()),
            Err(Error::Integrity(_))
        ));
        let src = LONG.replace(
            "#languages\n",
            "#languages\nmrd\tMarind\tMarind\tMarind\tPapunesia\n",
        ) + "mrd\t81A\t1\n";
        assert_eq!(load_long(src.as_bytes()).unwrap().n_cells(), 3);
    }

    #[test]
    fn long_rejects_unknown_feature() {
        let src = LONG.to_owned() + "eng\t26A\t1\n";
        assert!(matches!(
            load_long(src.as_bytes()),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn long_rejects_bad_structure() {
        assert!(matches!(
            load_long("eng\tx\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        let swapped = "#features\n#languages\n";
        assert!(matches!(
            load_long(swapped.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let bad_value = LONG.replace("eng\t81A\t2", "eng\t81A\tx");
        assert!(matches!(
            load_long(bad_value.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    fn lang(id: &str, genus: &str) -> Language {
        Language {
            id: id.into(),
            name: id.into(),
            genus: genus.into(),
            family: "F".into(),
            macroarea: "Eurasia".into(),
        }
    }

    fn feature(id: &str, n: u32) -> Feature {
        Feature {
            id: id.into(),
            name: id.into(),
            area: "A".into(),
            values: (1..=n)
                .map(|id| FeatureValue {
                    id,
                    name: format!("v{id}"),
                })
                .collect(),
        }
    }

    #[test]
    fn value_threshold_boundary() {
        // value 1 seen 10 times, value 2 seen 9 times, value 3 seen 10 times
        let langs: Vec<Language> = (0..29).map(|i| lang(&format!("l{i}"), "G")).collect();
        let cells: Vec<(String, &str, u32)> = (0..29)
            .map(|i| {
                (
                    format!("l{i}"),
                    "1A",
                    if i < 10 {
                        1
                    } else if i < 19 {
                        2
                    } else {
                        3
                    },
                )
            })
            .collect();
        let kb = TypologicalKb::new(langs, vec![feature("1A", 3)], cells).unwrap();
        let t = FilterThresholds {
            min_value_count: 10,
            min_features_per_language: 0,
            min_branch_size: 0,
        };
        let out = filter_kb(&kb, t);
        let ids: Vec<u32> = out
            .feature("1A")
            .unwrap()
            .values
            .iter()
            .map(|v| v.id)
            .collect();
        assert_eq!(ids, vec![1, 3]);
        assert_eq!(out.n_cells(), 20);
    }

    #[test]
    fn zero_thresholds_are_identity() {
        let kb = load_long(LONG.as_bytes()).unwrap();
        assert_eq!(filter_kb(&kb, FilterThresholds::NONE), kb);
    }

    #[test]
    fn small_branches_and_sparse_languages_are_dropped() {
        let mut langs: Vec<Language> = (0..5).map(|i| lang(&format!("a{i}"), "Big")).collect();
        langs.extend((0..4).map(|i| lang(&format!("b{i}"), "Small")));
        langs.push(lang("sparse", "Big"));
        let cells: Vec<(String, &str, u32)> = langs
            .iter()
            .enumerate()
            .filter(|(_, l)| l.id != "sparse")
            .flat_map(|(i, l)| {
                [
                    (l.id.clone(), "1A", 1 + (i as u32 % 2)),
                    (l.id.clone(), "2A", 2 - (i as u32 % 2)),
                ]
            })
            .collect();
        let kb =
            TypologicalKb::new(langs, vec![feature("1A", 2), feature("2A", 2)], cells).unwrap();
        let t = FilterThresholds {
            min_value_count: 0,
            min_features_per_language: 1,
            min_branch_size: 4,
        };
        let out = filter_kb(&kb, t);
        let ids: Vec<&str> = out.languages().iter().map(|l| l.id.as_str()).collect();
        assert_eq!(ids, vec!["a0", "a1", "a2", "a3", "a4"]);
        assert!(out.check_integrity().is_empty());
    }
}
