//! Measurement logs: parsing, strong-link selection, and RSSI aggregation into
//! signal matrices.
//!
//! A sensor field file is a CSV roster
//!
//! ```text
//! id,role,x,y[,z]
//! A1,anchor,0.1,0.2
//! T1,target,,
//! ```
//!
//! with `#` comment lines. A measurement file is a roster, a line `---`, and
//! a record table `tx_id,rx_id,timestamp_ms,rssi_dbm`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, LineError, ParseReport, Result};
use crate::model::SensorField;
use crate::ordinal::{tensor_from_signals, Orientation, SignalMatrix, SliceWarning};
use crate::pipeline::ordinal_unloc;
use crate::unfold::SolverOptions;

/// Section separator of a measurement file.
pub const SECTION_SEPARATOR: &str = "---";
pub const RECORD_HEADER: [&str; 4] = ["tx_id", "rx_id", "timestamp_ms", "rssi_dbm"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Anchor,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: String,
    pub role: Role,
    pub position: Option<Vec<f64>>,
}

/// Sensors of a field. Sensor indices put anchors first, each group in file
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    dimension: usize,
    entries: Vec<RosterEntry>,
}

impl Roster {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[RosterEntry] {
        &self.entries
    }

    pub fn anchors(&self) -> impl Iterator<Item = &RosterEntry> {
        self.entries.iter().filter(|e| e.role == Role::Anchor)
    }

    pub fn targets(&self) -> impl Iterator<Item = &RosterEntry> {
        self.entries.iter().filter(|e| e.role == Role::Target)
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors().count()
    }

    /// Entries in sensor-index order.
    pub fn ordered(&self) -> Vec<&RosterEntry> {
        self.anchors().chain(self.targets()).collect()
    }

    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.ordered()
            .into_iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect()
    }

    pub fn anchor_positions(&self) -> Array2<f64> {
        let rows: Vec<&RosterEntry> = self.anchors().collect();
        let mut a = Array2::zeros((rows.len(), self.dimension));
        for (r, e) in rows.iter().enumerate() {
            let p = e.position.as_ref().expect("anchors validated to have coordinates");
            for (c, v) in p.iter().enumerate() {
                a[[r, c]] = *v;
            }
        }
        a
    }

    /// The field with ground-truth targets when every target has coordinates.
    pub fn to_sensor_field(&self) -> Result<SensorField<f64>> {
        let anchors = self.anchor_positions();
        let targets: Option<Vec<&Vec<f64>>> = self.targets().map(|e| e.position.as_ref()).collect();
        let targets = targets.map(|t| {
            let mut out = Array2::zeros((t.len(), self.dimension));
            for (r, p) in t.iter().enumerate() {
                for (c, v) in p.iter().enumerate() {
                    out[[r, c]] = *v;
                }
            }
            out
        });
        SensorField::new(anchors, targets)
    }

    /// Writes the roster section (no trailing separator).
    pub fn to_csv(&self) -> String {
        let axes = ["x", "y", "z"];
        let mut s = format!("id,role,{}\n", axes[..self.dimension].join(","));
        for e in &self.entries {
            let role = match e.role {
                Role::Anchor => "anchor",
                Role::Target => "target",
            };
            let coords = match &e.position {
                Some(p) => p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
                None => vec![""; self.dimension].join(","),
            };
            s.push_str(&format!("{},{},{}\n", e.id, role, coords));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub tx: String,
    pub rx: String,
    pub timestamp_ms: i64,
    pub rssi_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub roster: Roster,
    pub records: Vec<Record>,
}

impl MeasurementSet {
    /// Validates ids against the roster.
    pub fn new(roster: Roster, records: Vec<Record>) -> Result<Self> {
        let known = roster.index_of();
        let errors: Vec<LineError> = records
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                record_problem(&known, r).map(|message| LineError { line: i + 1, message })
            })
            .collect();
        if !errors.is_empty() {
            return Err(ParseReport {
                source_name: "records".into(),
                errors,
            }
            .into());
        }
        Ok(Self { roster, records })
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.roster.to_csv();
        s.push_str(SECTION_SEPARATOR);
        s.push('\n');
        s.push_str(&RECORD_HEADER.join(","));
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!("{},{},{},{}\n", r.tx, r.rx, r.timestamp_ms, r.rssi_dbm));
        }
        s
    }

    /// Records of every directed link, each in chronological order (ties by
    /// file order).
    pub fn links(&self) -> BTreeMap<(&str, &str), Vec<&Record>> {
        let mut map: BTreeMap<(&str, &str), Vec<&Record>> = BTreeMap::new();
        for r in &self.records {
            map.entry((r.tx.as_str(), r.rx.as_str())).or_default().push(r);
        }
        for v in map.values_mut() {
            v.sort_by_key(|r| r.timestamp_ms);
        }
        map
    }

    /// Fewest records on any measured directed link; 0 without records.
    pub fn min_link_records(&self) -> usize {
        self.links().values().map(Vec::len).min().unwrap_or(0)
    }
}

fn record_problem(known: &HashMap<&str, usize>, r: &Record) -> Option<String> {
    if !known.contains_key(r.tx.as_str()) {
        return Some(format!("unknown sensor id '{}'", r.tx));
    }
    if !known.contains_key(r.rx.as_str()) {
        return Some(format!("unknown sensor id '{}'", r.rx));
    }
    if r.tx == r.rx {
        return Some(format!("link from '{}' to itself", r.tx));
    }
    if !r.rssi_dbm.is_finite() {
        return Some("non-finite rssi".into());
    }
    None
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Non-empty rows of a CSV section with their 1-based file line numbers.
fn rows(text: &str, line_offset: usize, errors: &mut Vec<LineError>) -> Vec<(usize, Vec<String>)> {
    let mut out = Vec::new();
    for rec in csv_reader(text).records() {
        match rec {
            Ok(r) => {
                let line = r.position().map_or(0, |p| p.line() as usize) + line_offset;
                if r.iter().all(str::is_empty) {
                    continue;
                }
                out.push((line, r.iter().map(str::to_string).collect()));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize) + line_offset;
                errors.push(LineError {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    out
}

fn parse_roster_section(text: &str, line_offset: usize, errors: &mut Vec<LineError>) -> Option<Roster> {
    let mut rows = rows(text, line_offset, errors).into_iter();
    let Some((hline, header)) = rows.next() else {
        errors.push(LineError {
            line: line_offset + 1,
            message: "missing roster header".into(),
        });
        return None;
    };
    let dimension = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["id", "role", "x", "y"] => 2,
        ["id", "role", "x", "y", "z"] => 3,
        _ => {
            errors.push(LineError {
                line: hline,
                message: format!("expected header 'id,role,x,y[,z]', found '{}'", header.join(",")),
            });
            return None;
        }
    };
    let mut entries: Vec<RosterEntry> = Vec::new();
    for (line, fields) in rows {
        let mut fail = |message: String| errors.push(LineError { line, message });
        if fields.len() != 2 + dimension {
            fail(format!("expected {} fields, found {}", 2 + dimension, fields.len()));
            continue;
        }
        let id = fields[0].clone();
        if id.is_empty() || !id.is_ascii() {
            fail("sensor id must be a non-empty ASCII token".into());
            continue;
        }
        if entries.iter().any(|e| e.id == id) {
            fail(format!("duplicate sensor id '{id}'"));
            continue;
        }
        let role = match fields[1].as_str() {
            "anchor" => Role::Anchor,
            "target" => Role::Target,
            other => {
                fail(format!("unknown role '{other}' (expected anchor or target)"));
                continue;
            }
        };
        let coords = &fields[2..];
        let position = if coords.iter().all(String::is_empty) {
            None
        } else {
            let parsed: std::result::Result<Vec<f64>, _> = coords.iter().map(|c| c.parse::<f64>()).collect();
            match parsed {
                Ok(p) if p.iter().all(|v| v.is_finite()) => Some(p),
                _ => {
                    fail(format!("non-numeric coordinates for '{id}'"));
                    continue;
                }
            }
        };
        if role == Role::Anchor && position.is_none() {
            fail(format!("anchor '{id}' has no coordinates"));
            continue;
        }
        entries.push(RosterEntry { id, role, position });
    }
    Some(Roster { dimension, entries })
}

fn report<T>(source_name: &str, errors: Vec<LineError>, value: Option<T>) -> Result<T> {
    match value {
        Some(v) if errors.is_empty() => Ok(v),
        _ => Err(ParseReport {
            source_name: source_name.to_string(),
            errors,
        }
        .into()),
    }
}

/// Parses a sensor field (roster) file.
pub fn parse_sensor_field_str(text: &str, source_name: &str) -> Result<Roster> {
    let mut errors = Vec::new();
    let roster = parse_roster_section(text, 0, &mut errors);
    report(source_name, errors, roster)
}

pub fn parse_sensor_field(path: impl AsRef<Path>) -> Result<Roster> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_sensor_field_str(&text, &path.display().to_string())
}

/// Parses a measurement file; every malformed line is reported.
pub fn parse_measurements_str(text: &str, source_name: &str) -> Result<MeasurementSet> {
    let lines: Vec<&str> = text.lines().collect();
    let Some(sep) = lines.iter().position(|l| l.trim() == SECTION_SEPARATOR) else {
        return Err(ParseReport {
            source_name: source_name.to_string(),
            errors: vec![LineError {
                line: lines.len().max(1),
                message: format!("missing '{SECTION_SEPARATOR}' separator between roster and records"),
            }],
        }
        .into());
    };
    let mut errors = Vec::new();
    let roster_text = lines[..sep].join("\n");
    let records_text = lines[sep + 1..].join("\n");
    let roster = parse_roster_section(&roster_text, 0, &mut errors);

    let mut records = Vec::new();
    let mut rows = rows(&records_text, sep + 1, &mut errors).into_iter();
    match rows.next() {
        None => {}
        Some((line, header)) if header != RECORD_HEADER => errors.push(LineError {
            line,
            message: format!("expected header '{}', found '{}'", RECORD_HEADER.join(","), header.join(",")),
        }),
        Some(_) => {
            let known = roster.as_ref().map(|r| r.index_of()).unwrap_or_default();
            for (line, f) in rows {
                if f.len() != 4 {
                    errors.push(LineError {
                        line,
                        message: format!("expected 4 fields, found {}", f.len()),
                    });
                    continue;
                }
                let (Ok(timestamp_ms), Ok(rssi_dbm)) = (f[2].parse::<i64>(), f[3].parse::<f64>()) else {
                    errors.push(LineError {
                        line,
                        message: "non-numeric timestamp or rssi".into(),
                    });
                    continue;
                };
                let rec = Record {
                    tx: f[0].clone(),
                    rx: f[1].clone(),
                    timestamp_ms,
                    rssi_dbm,
                };
                if roster.is_some() {
                    if let Some(message) = record_problem(&known, &rec) {
                        errors.push(LineError { line, message });
                        continue;
                    }
                }
                records.push(rec);
            }
        }
    }
    let set = roster.map(|roster| MeasurementSet { roster, records });
    report(source_name, errors, set)
}

pub fn parse_measurements(path: impl AsRef<Path>) -> Result<MeasurementSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_measurements_str(&text, &path.display().to_string())
}

/// Keeps the strongest `ceil(keep_fraction * count)` records of every directed
/// link (ties by earlier timestamp, then file order). Surviving records keep
/// their file order.
pub fn select_strong_links(ms: &MeasurementSet, keep_fraction: f64) -> Result<MeasurementSet> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Config(format!("keep fraction must lie in (0, 1], got {keep_fraction}")));
    }
    let mut by_link: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, r) in ms.records.iter().enumerate() {
        by_link.entry((r.tx.as_str(), r.rx.as_str())).or_default().push(i);
    }
    let mut keep = vec![false; ms.records.len()];
    for idx in by_link.values_mut() {
        idx.sort_by(|&a, &b| {
            let (ra, rb) = (&ms.records[a], &ms.records[b]);
            rb.rssi_dbm
                .total_cmp(&ra.rssi_dbm)
                .then(ra.timestamp_ms.cmp(&rb.timestamp_ms))
                .then(a.cmp(&b))
        });
        // tolerance keeps e.g. (1/3) * 3 from rounding up to 2
        let count = ((keep_fraction * idx.len() as f64) - 1e-9).ceil().max(1.0) as usize;
        for &i in idx.iter().take(count) {
            keep[i] = true;
        }
    }
    let records = ms
        .records
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    Ok(MeasurementSet {
        roster: ms.roster.clone(),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregator {
    Median,
    Mean,
    /// the `k`-th (1-based) chronological record of each directed link
    SingleSample(usize),
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Symmetric RSSI matrix (dBm, decreasing with distance) over the roster's
/// sensor order. Both link directions feed each entry; unmeasured pairs are
/// masked.
pub fn measurement_signal_matrix(ms: &MeasurementSet, aggregator: Aggregator) -> Result<SignalMatrix<f64>> {
    let index = ms.roster.index_of();
    let n = index.len();
    let links = ms.links();
    let mut values = Array2::zeros((n, n));
    let mut present = Array2::from_elem((n, n), false);
    let mut pooled: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for ((tx, rx), recs) in &links {
        let (a, b) = (index[tx], index[rx]);
        let key = (a.min(b), a.max(b));
        let entry = pooled.entry(key).or_default();
        match aggregator {
            Aggregator::SingleSample(k) => {
                if k == 0 || recs.len() < k {
                    return Err(Error::SampleOutOfRange {
                        index: k,
                        tx: tx.to_string(),
                        rx: rx.to_string(),
                        available: recs.len(),
                    });
                }
                entry.push(recs[k - 1].rssi_dbm);
            }
            _ => entry.extend(recs.iter().map(|r| r.rssi_dbm)),
        }
    }
    for ((i, j), v) in pooled {
        let agg = match aggregator {
            Aggregator::Median => median(v),
            Aggregator::Mean | Aggregator::SingleSample(_) => v.iter().sum::<f64>() / v.len() as f64,
        };
        values[[i, j]] = agg;
        values[[j, i]] = agg;
        present[[i, j]] = true;
        present[[j, i]] = true;
    }
    SignalMatrix::new(values, present, Orientation::DecreasingWithDistance)
}

/// How `localize_measurements` turns records into estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateMode {
    /// one estimate from an aggregated matrix
    Aggregate(Aggregator),
    /// one estimate per sample index `1..=K`, `K` the fewest retained records
    /// on any link, plus their average
    EverySample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeOptions {
    pub keep_fraction: f64,
    pub mode: EstimateMode,
    pub solver: SolverOptions<f64>,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        Self {
            keep_fraction: 0.01,
            mode: EstimateMode::Aggregate(Aggregator::Median),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimates {
    pub id: String,
    /// `(sample index, position)`; the index is `None` for median/mean aggregates
    pub estimates: Vec<(Option<usize>, Vec<f64>)>,
    /// mean of `estimates`
    pub averaged: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeReport {
    pub targets: Vec<TargetEstimates>,
    pub warnings: Vec<SliceWarning>,
}

/// Filters, aggregates and runs the ordinal pipeline on a measurement set.
pub fn localize_measurements(ms: &MeasurementSet, opts: &LocalizeOptions) -> Result<LocalizeReport> {
    let anchors = ms.roster.anchor_positions();
    if anchors.nrows() < 2 {
        return Err(Error::Domain(format!("need at least 2 anchors, found {}", anchors.nrows())));
    }
    let filtered = select_strong_links(ms, opts.keep_fraction)?;
    let runs: Vec<(Option<usize>, Aggregator)> = match opts.mode {
        EstimateMode::Aggregate(a @ Aggregator::SingleSample(k)) => vec![(Some(k), a)],
        EstimateMode::Aggregate(a) => vec![(None, a)],
        EstimateMode::EverySample => {
            let k = filtered.min_link_records();
            if k == 0 {
                return Err(Error::EmptyProblem("no records to localize from"));
            }
            (1..=k).map(|s| (Some(s), Aggregator::SingleSample(s))).collect()
        }
    };
    let ids: Vec<String> = ms.roster.targets().map(|e| e.id.clone()).collect();
    let mut estimates: Vec<Vec<(Option<usize>, Vec<f64>)>> = vec![Vec::new(); ids.len()];
    let mut warnings = Vec::new();
    for (sample, aggregator) in runs {
        let signals = measurement_signal_matrix(&filtered, aggregator)?;
        let (tensor, w) = tensor_from_signals(&signals);
        warnings.extend(w);
        let out = ordinal_unloc(anchors.view(), &tensor, &opts.solver)?;
        for (j, pos) in out.positions().into_iter().enumerate() {
            if let Some(p) = pos {
                estimates[j].push((sample, p.to_vec()));
            }
        }
    }
    let q = ms.roster.dimension();
    let targets = ids
        .into_iter()
        .zip(estimates)
        .map(|(id, est)| {
            let mut avg = Array1::<f64>::zeros(q);
            for (_, p) in &est {
                avg += &Array1::from(p.clone());
            }
            if !est.is_empty() {
                avg /= est.len() as f64;
            }
            TargetEstimates {
                id,
                averaged: avg.to_vec(),
                estimates: est,
            }
        })
        .collect();
    Ok(LocalizeReport { targets, warnings })
}

/// Layout and channel of a synthetic RSSI log: four anchors near the corners
/// of a `width x height` rectangle, targets inside it, and every sample
/// redrawing a symmetric per-link path-loss exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub width: f64,
    pub height: f64,
    /// largest inward displacement of an anchor from its corner
    pub anchor_jitter: f64,
    /// targets are kept this far from the rectangle edges
    pub target_margin: f64,
    pub targets: usize,
    pub samples: usize,
    pub exponent_range: (f64, f64),
    pub transmit_power_mw: f64,
    pub sample_period_ms: i64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            width: 4.0,
            height: 5.0,
            anchor_jitter: 0.25,
            target_margin: 0.5,
            targets: 1,
            samples: 1000,
            exponent_range: (2.0, 6.0),
            transmit_power_mw: 1.0,
            sample_period_ms: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMeasurements {
    /// anchors and targets with coordinates
    pub field: Roster,
    /// roster without target coordinates, plus the records
    pub measurements: MeasurementSet,
    /// exponent matrix of every sample, in sensor-index order
    pub exponents: Vec<Array2<f64>>,
}

/// Generates a synthetic measurement log. Sample `s` is recorded at
/// `s * sample_period_ms` on the forward direction of each link and one
/// millisecond later on the reverse; both directions carry the same power.
pub fn synthesize_measurements(spec: &SyntheticSpec) -> Result<SyntheticMeasurements> {
    use crate::model::pairwise_distances;
    use crate::signals::{mw_to_dbm, rss_signal_matrix, sample_link_exponents, PathLossExponent, RssModel};
    use rand::Rng;

    let (a, b) = spec.exponent_range;
    let exponent = PathLossExponent::Uniform { a, b };
    exponent.validate()?;
    if spec.samples == 0 || spec.targets == 0 {
        return Err(Error::Config("synthetic log needs at least one target and one sample".into()));
    }
    if !(spec.width > 2.0 * spec.target_margin && spec.height > 2.0 * spec.target_margin) {
        return Err(Error::Config("target margin leaves no room inside the rectangle".into()));
    }
    let mut layout = crate::rng::stream(&[spec.seed, 0]);
    let corners = [(0.0, 0.0), (spec.width, 0.0), (spec.width, spec.height), (0.0, spec.height)];
    let mut entries = Vec::new();
    for (i, (cx, cy)) in corners.into_iter().enumerate() {
        let dx = spec.anchor_jitter * layout.random::<f64>();
        let dy = spec.anchor_jitter * layout.random::<f64>();
        let x = if cx == 0.0 { cx + dx } else { cx - dx };
        let y = if cy == 0.0 { cy + dy } else { cy - dy };
        entries.push(RosterEntry {
            id: format!("A{}", i + 1),
            role: Role::Anchor,
            position: Some(vec![x, y]),
        });
    }
    for j in 0..spec.targets {
        let x = spec.target_margin + (spec.width - 2.0 * spec.target_margin) * layout.random::<f64>();
        let y = spec.target_margin + (spec.height - 2.0 * spec.target_margin) * layout.random::<f64>();
        entries.push(RosterEntry {
            id: format!("T{}", j + 1),
            role: Role::Target,
            position: Some(vec![x, y]),
        });
    }
    let field = Roster { dimension: 2, entries };
    let d = pairwise_distances(&field.to_sensor_field()?)?;
    let ids: Vec<String> = field.ordered().iter().map(|e| e.id.clone()).collect();
    let n = ids.len();
    let model = RssModel::new(spec.transmit_power_mw, 1.0)?;
    let mut channel = crate::rng::stream(&[spec.seed, 1]);
    let mut exponents = Vec::with_capacity(spec.samples);
    let mut records = Vec::with_capacity(spec.samples * n * (n - 1));
    for s in 0..spec.samples {
        let g = sample_link_exponents(n, &exponent, &mut channel);
        let p = rss_signal_matrix(&d, &model, &g)?;
        let t = s as i64 * spec.sample_period_ms;
        for i in 0..n {
            for k in (i + 1)..n {
                let dbm = mw_to_dbm(p.values()[[i, k]]);
                records.push(Record {
                    tx: ids[i].clone(),
                    rx: ids[k].clone(),
                    timestamp_ms: t,
                    rssi_dbm: dbm,
                });
                records.push(Record {
                    tx: ids[k].clone(),
                    rx: ids[i].clone(),
                    timestamp_ms: t + 1,
                    rssi_dbm: dbm,
                });
            }
        }
        exponents.push(g);
    }
    let hidden = Roster {
        dimension: 2,
        entries: field
            .entries
            .iter()
            .map(|e| RosterEntry {
                position: if e.role == Role::Anchor { e.position.clone() } else { None },
                ..e.clone()
            })
            .collect(),
    };
    Ok(SyntheticMeasurements {
        field,
        measurements: MeasurementSet { roster: hidden, records },
        exponents,
    })
}
