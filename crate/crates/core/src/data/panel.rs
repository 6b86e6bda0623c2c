//! Long-format CSV panels: `date,tau_days,yield`, preceded by optional
//! `# key=value` metadata lines.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::numerics::natural_cubic_spline;

pub const DEFAULT_DELTA: f64 = 1.0 / 252.0;
const DATE_FORMAT: &str = "%Y-%m-%d";
const YIELD_BOUND: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Decimal,
    Percent,
}

impl Units {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "decimal" => Some(Units::Decimal),
            "percent" => Some(Units::Percent),
            _ => None,
        }
    }

    fn factor(self) -> f64 {
        match self {
            Units::Decimal => 1.0,
            Units::Percent => 0.01,
        }
    }
}

impl std::str::FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Units::parse(s).ok_or_else(|| format!("unknown units `{s}`; expected decimal or percent"))
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Decimal => "decimal",
            Units::Percent => "percent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    ForwardFill,
    DropDate,
    #[default]
    Error,
}

impl std::str::FromStr for MissingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forward-fill" | "ffill" => Ok(Self::ForwardFill),
            "drop-date" | "drop" => Ok(Self::DropDate),
            "error" => Ok(Self::Error),
            other => Err(format!("unknown missing-data policy `{other}`")),
        }
    }
}

/// Decimal annualized continuously-compounded yields, dates × tenors.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldPanel {
    dates: Vec<NaiveDate>,
    tau_days: Vec<usize>,
    yields: Vec<Vec<Option<f64>>>,
    metadata: BTreeMap<String, String>,
}

impl YieldPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tau_days: Vec<usize>,
        yields: Vec<Vec<Option<f64>>>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, DataError> {
        if dates.is_empty() || tau_days.is_empty() {
            return Err(DataError::Empty);
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DataError::Invalid("dates must be strictly increasing".into()));
        }
        if tau_days[0] == 0 || tau_days.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DataError::Invalid("tenors must be positive and strictly increasing".into()));
        }
        if yields.len() != dates.len() || yields.iter().any(|r| r.len() != tau_days.len()) {
            return Err(DataError::Invalid("yield table does not match dates × tenors".into()));
        }
        for (r, row) in yields.iter().enumerate() {
            for (c, y) in row.iter().enumerate() {
                if let Some(y) = y {
                    if !y.is_finite() || y.abs() >= YIELD_BOUND {
                        return Err(DataError::Invalid(format!(
                            "yield {y} at date {} tau {} outside the decimal sanity bound",
                            dates[r], tau_days[c]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            dates,
            tau_days,
            yields,
            metadata,
        })
    }

    /// Complete panel from dense rows.
    pub fn from_rows(dates: Vec<NaiveDate>, tau_days: Vec<usize>, rows: &[Vec<f64>]) -> Result<Self, DataError> {
        let yields = rows.iter().map(|r| r.iter().map(|v| Some(*v)).collect()).collect();
        Self::new(dates, tau_days, yields, BTreeMap::new())
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tau_days(&self) -> &[usize] {
        &self.tau_days
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.metadata
    }

    pub fn get(&self, date: usize, tenor: usize) -> Option<f64> {
        self.yields[date][tenor]
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// `delta` from metadata, or 1/252.
    pub fn delta(&self) -> Result<f64, DataError> {
        match self.metadata.get("delta") {
            None => Ok(DEFAULT_DELTA),
            Some(s) => {
                let d = parse_delta(s).ok_or_else(|| DataError::Invalid(format!("invalid delta `{s}`")))?;
                Ok(d)
            }
        }
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn missing_cells(&self) -> Vec<(NaiveDate, usize)> {
        let mut out = Vec::new();
        for (d, row) in self.dates.iter().zip(&self.yields) {
            for (t, y) in self.tau_days.iter().zip(row) {
                if y.is_none() {
                    out.push((*d, *t));
                }
            }
        }
        out
    }

    /// Dense rows; errors if any cell is missing.
    pub fn complete_rows(&self) -> Result<Vec<Vec<f64>>, DataError> {
        let missing = self.missing_cells();
        if !missing.is_empty() {
            return Err(DataError::Missing { cells: missing });
        }
        Ok(self
            .yields
            .iter()
            .map(|r| r.iter().map(|y| y.expect("complete")).collect())
            .collect())
    }
}

fn parse_delta(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse().ok()?,
    };
    (v > 0.0 && v.is_finite()).then_some(v)
}

/// Reads a panel. Units come from the `units` metadata key or `units`; they
/// must be given by at least one and agree if both are. Percent input is
/// converted to decimal.
pub fn read_panel<R: Read>(mut reader: R, units: Option<Units>) -> Result<YieldPanel, DataError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut metadata = BTreeMap::new();
    let mut body_start = 0;
    let mut skipped_lines = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            for part in rest.split(',') {
                if let Some((k, v)) = part.split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
        } else if !trimmed.is_empty() {
            break;
        }
        body_start += line.len();
        skipped_lines += 1;
    }
    let declared = match metadata.get("units") {
        Some(u) => Some(Units::parse(u).ok_or_else(|| DataError::Invalid(format!("unknown units `{u}`")))?),
        None => None,
    };
    let units = match (declared, units) {
        (Some(d), Some(r)) if d != r => {
            return Err(DataError::ConflictingUnits {
                declared: d.to_string(),
                requested: r.to_string(),
            })
        }
        (Some(u), _) | (None, Some(u)) => u,
        (None, None) => return Err(DataError::UndeclaredUnits),
    };
    metadata.insert("units".into(), Units::Decimal.to_string());

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text[body_start..].as_bytes());
    let headers = rdr.headers()?.clone();
    let expected = ["date", "tau_days", "yield"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(DataError::Parse {
            line: skipped_lines + 1,
            message: format!("expected header `date,tau_days,yield`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut cells: HashMap<(NaiveDate, usize), f64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line()) + skipped_lines;
            DataError::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(0, |p| p.line()) + skipped_lines;
        let bad = |message: String| DataError::Parse { line, message };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(&rec[0], DATE_FORMAT).map_err(|e| bad(format!("date `{}`: {e}", &rec[0])))?;
        let tau: usize = rec[1].parse().map_err(|e| bad(format!("tau_days `{}`: {e}", &rec[1])))?;
        if tau == 0 {
            return Err(bad("tau_days must be positive".into()));
        }
        if rec[2].is_empty() {
            continue;
        }
        let raw: f64 = rec[2].parse().map_err(|e| bad(format!("yield `{}`: {e}", &rec[2])))?;
        let y = raw * units.factor();
        if !y.is_finite() || y.abs() >= YIELD_BOUND {
            return Err(bad(format!("yield {y} outside the decimal sanity bound; check declared units")));
        }
        if cells.insert((date, tau), y).is_some() {
            return Err(DataError::Duplicate { date, tau });
        }
    }
    if cells.is_empty() {
        return Err(DataError::Empty);
    }
    let mut dates: Vec<NaiveDate> = cells.keys().map(|k| k.0).collect();
    dates.sort();
    dates.dedup();
    let mut taus: Vec<usize> = cells.keys().map(|k| k.1).collect();
    taus.sort();
    taus.dedup();
    let yields = dates
        .iter()
        .map(|d| taus.iter().map(|t| cells.get(&(*d, *t)).copied()).collect())
        .collect();
    YieldPanel::new(dates, taus, yields, metadata)
}

pub fn load_panel(path: impl AsRef<Path>, units: Option<Units>) -> Result<YieldPanel, DataError> {
    read_panel(BufReader::new(File::open(path)?), units)
}

/// Canonical form: sorted metadata lines, header, rows by date then tenor,
/// yields in shortest round-trip notation; missing cells are omitted.
pub fn write_panel<W: Write>(mut out: W, panel: &YieldPanel) -> Result<(), DataError> {
    for (k, v) in &panel.metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "date,tau_days,yield")?;
    for (d, row) in panel.dates.iter().zip(&panel.yields) {
        let date = d.format(DATE_FORMAT);
        for (t, y) in panel.tau_days.iter().zip(row) {
            if let Some(y) = y {
                writeln!(out, "{date},{t},{y:?}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_panel(path: impl AsRef<Path>, panel: &YieldPanel) -> Result<(), DataError> {
    write_panel(BufWriter::new(File::create(path)?), panel)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CleaningReport {
    pub filled: Vec<(NaiveDate, usize)>,
    pub dropped: Vec<NaiveDate>,
}

impl fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} cells forward-filled, {} dates dropped", self.filled.len(), self.dropped.len())
    }
}

/// Removes gaps. Forward fill cannot repair gaps on the first dates of a
/// tenor; those dates are dropped and reported.
pub fn handle_missing(panel: &YieldPanel, policy: MissingPolicy) -> Result<(YieldPanel, CleaningReport), DataError> {
    let missing = panel.missing_cells();
    let mut report = CleaningReport::default();
    if missing.is_empty() {
        return Ok((panel.clone(), report));
    }
    let mut keep_dates = Vec::new();
    let mut keep_rows = Vec::new();
    match policy {
        MissingPolicy::Error => return Err(DataError::Missing { cells: missing }),
        MissingPolicy::DropDate => {
            for (d, row) in panel.dates.iter().zip(&panel.yields) {
                if row.iter().all(Option::is_some) {
                    keep_dates.push(*d);
                    keep_rows.push(row.clone());
                } else {
                    report.dropped.push(*d);
                }
            }
        }
        MissingPolicy::ForwardFill => {
            let mut last: Vec<Option<f64>> = vec![None; panel.tau_days.len()];
            for (d, row) in panel.dates.iter().zip(&panel.yields) {
                let mut filled = row.clone();
                for (c, y) in filled.iter_mut().enumerate() {
                    match y {
                        Some(v) => last[c] = Some(*v),
                        None => {
                            if let Some(prev) = last[c] {
                                *y = Some(prev);
                                report.filled.push((*d, panel.tau_days[c]));
                            }
                        }
                    }
                }
                if filled.iter().all(Option::is_some) {
                    keep_dates.push(*d);
                    keep_rows.push(filled);
                } else {
                    report.dropped.push(*d);
                }
            }
        }
    }
    if keep_dates.is_empty() {
        return Err(DataError::Empty);
    }
    let cleaned = YieldPanel::new(keep_dates, panel.tau_days.clone(), keep_rows, panel.metadata.clone())?;
    Ok((cleaned, report))
}

/// Yields at integer lags `1..=m` on one date: natural cubic spline through
/// the available tenors, held flat beyond the first and last.
pub fn interpolate_to_grid(panel: &YieldPanel, date: usize, m: usize) -> Result<Vec<f64>, DataError> {
    let lags: Vec<usize> = (1..=m).collect();
    interpolate_lags(panel, date, &lags)
}

fn interpolate_lags(panel: &YieldPanel, date: usize, lags: &[usize]) -> Result<Vec<f64>, DataError> {
    let d = *panel
        .dates
        .get(date)
        .ok_or_else(|| DataError::Invalid(format!("date index {date} out of range")))?;
    let (knots, values): (Vec<f64>, Vec<f64>) = panel
        .tau_days
        .iter()
        .zip(&panel.yields[date])
        .filter_map(|(t, y)| y.map(|y| (*t as f64, y)))
        .unzip();
    if knots.len() < 2 {
        return Err(DataError::TooFewTenors { date: d, found: knots.len() });
    }
    let spline = natural_cubic_spline(&knots, &values)?;
    Ok(lags.iter().map(|&l| spline.eval(l as f64)).collect())
}

/// Panel rows evaluated at `tau` (exact where `tau` hits a tenor).
pub fn panel_on_grid(panel: &YieldPanel, tau: &[usize]) -> Result<Vec<Vec<f64>>, DataError> {
    (0..panel.len()).map(|d| interpolate_lags(panel, d, tau)).collect()
}
