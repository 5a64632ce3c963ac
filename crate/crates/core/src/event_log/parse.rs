use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{
    Case, DurationUnit, EventLog, EventRecord, FeatureSchema, LogError, NominalFeature, Timestamp,
    END, START,
};

/// Column mapping and parsing options for CSV event logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParseConfig {
    pub delimiter: char,
    pub case_column: String,
    pub event_column: String,
    pub time_column: String,
    /// chrono format string; when absent `yyyy/MM/dd` and ISO-8601 are tried.
    pub date_format: Option<String>,
    /// Columns forced numeric.
    pub numeric_columns: Vec<String>,
    /// Columns forced nominal.
    pub nominal_columns: Vec<String>,
    pub ignore_columns: Vec<String>,
    /// When set, only the forced columns become features.
    pub only_listed: bool,
    /// Maximum number of data rows read from the top of the file.
    pub record_limit: Option<usize>,
    pub duration_unit: DurationUnit,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig {
            delimiter: ',',
            case_column: "case".into(),
            event_column: "event".into(),
            time_column: "time".into(),
            date_format: None,
            numeric_columns: Vec::new(),
            nominal_columns: Vec::new(),
            ignore_columns: Vec::new(),
            only_listed: false,
            record_limit: None,
            duration_unit: DurationUnit::Seconds,
        }
    }
}

impl ParseConfig {
    /// Mapping that reads exactly the features of `schema`.
    pub fn for_schema(schema: &FeatureSchema) -> Self {
        ParseConfig {
            numeric_columns: schema.numeric.clone(),
            nominal_columns: schema.nominal_names().map(str::to_string).collect(),
            only_listed: true,
            duration_unit: schema.duration_unit,
            ..ParseConfig::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub rows_read: usize,
    /// Set when the record limit cut a case in half and that case was dropped.
    pub dropped_partial_case: Option<String>,
}

pub fn parse_log<R: Read>(raw: R, config: &ParseConfig) -> Result<EventLog, LogError> {
    parse_log_with_stats(raw, config).map(|(log, _)| log)
}

#[derive(PartialEq)]
enum Kind {
    Numeric,
    Nominal,
}

pub fn parse_log_with_stats<R: Read>(
    raw: R,
    config: &ParseConfig,
) -> Result<(EventLog, ParseStats), LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .from_reader(raw);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| LogError::MissingColumn(name.into()))
    };
    let case_col = find(&config.case_column)?;
    let event_col = find(&config.event_column)?;
    let time_col = find(&config.time_column)?;
    for forced in config.numeric_columns.iter().chain(&config.nominal_columns) {
        find(forced)?;
    }

    let limit = config.record_limit.unwrap_or(usize::MAX);
    let mut rows: Vec<(u64, csv::StringRecord)> = Vec::new();
    let mut next_case: Option<String> = None;
    for result in reader.records() {
        let record = result?;
        let line = record.position().map_or(0, |p| p.line());
        if rows.len() == limit {
            next_case = Some(record.get(case_col).unwrap_or("").trim().to_string());
            break;
        }
        rows.push((line, record));
    }
    if rows.is_empty() {
        return Err(LogError::EmptyLog);
    }
    fn cell(r: &csv::StringRecord, i: usize) -> &str {
        r.get(i).map(str::trim).unwrap_or("")
    }

    // feature columns and their kinds
    let mut features: Vec<(usize, Kind)> = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        if i == case_col || i == event_col || i == time_col || config.ignore_columns.contains(name) {
            continue;
        }
        if config.numeric_columns.contains(name) {
            features.push((i, Kind::Numeric));
        } else if config.nominal_columns.contains(name) {
            features.push((i, Kind::Nominal));
        } else if !config.only_listed {
            let mut values = rows.iter().map(|(_, r)| cell(r, i)).filter(|v| !v.is_empty()).peekable();
            if values.peek().is_none() {
                continue;
            }
            let numeric = values.all(|v| v.parse::<f64>().is_ok_and(f64::is_finite));
            features.push((i, if numeric { Kind::Numeric } else { Kind::Nominal }));
        }
    }
    let numeric_cols: Vec<usize> =
        features.iter().filter(|(_, k)| *k == Kind::Numeric).map(|(i, _)| *i).collect();
    let nominal_cols: Vec<usize> =
        features.iter().filter(|(_, k)| *k == Kind::Nominal).map(|(i, _)| *i).collect();

    let mut domains: Vec<BTreeSet<String>> = vec![BTreeSet::new(); nominal_cols.len()];
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cases: Vec<Case> = Vec::new();
    for (line, row) in &rows {
        let case_id = cell(row, case_col).to_string();
        let label = cell(row, event_col).to_string();
        if label.is_empty() {
            return Err(LogError::EmptyLabel { row: *line });
        }
        if label == START || label == END {
            return Err(LogError::ReservedLabel { row: *line, label });
        }
        let raw_time = cell(row, time_col);
        let timestamp = parse_timestamp(raw_time, config.date_format.as_deref())
            .ok_or_else(|| LogError::BadTimestamp { row: *line, value: raw_time.to_string() })?;
        let mut numeric = Vec::with_capacity(numeric_cols.len());
        for &c in &numeric_cols {
            let v = cell(row, c);
            if v.is_empty() {
                numeric.push(None);
            } else {
                let parsed = v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    LogError::BadNumber { row: *line, column: headers[c].clone(), value: v.into() }
                })?;
                numeric.push(Some(parsed));
            }
        }
        let nominal = nominal_cols
            .iter()
            .zip(domains.iter_mut())
            .map(|(&c, domain)| {
                let v = cell(row, c);
                (!v.is_empty()).then(|| {
                    domain.insert(v.to_string());
                    v.to_string()
                })
            })
            .collect();
        let record = EventRecord { case_id: case_id.clone(), label, timestamp, numeric, nominal };
        let slot = *index.entry(case_id.clone()).or_insert_with(|| {
            cases.push(Case { id: case_id, records: Vec::new() });
            cases.len() - 1
        });
        cases[slot].records.push(record);
    }

    let mut stats = ParseStats { rows_read: rows.len(), dropped_partial_case: None };
    if let Some(cut) = next_case {
        if let Some(&slot) = index.get(&cut) {
            cases.remove(slot);
            stats.dropped_partial_case = Some(cut);
        }
    }
    if cases.is_empty() {
        return Err(LogError::EmptyLog);
    }
    for case in &mut cases {
        case.records.sort_by_key(|r| r.timestamp);
    }

    let schema = FeatureSchema::new(
        numeric_cols.iter().map(|&c| headers[c].clone()).collect(),
        nominal_cols
            .iter()
            .zip(domains)
            .map(|(&c, d)| NominalFeature { name: headers[c].clone(), domain: d.into_iter().collect() })
            .collect(),
        config.duration_unit,
    )?;
    Ok((EventLog { schema, cases, augmented: false }, stats))
}

/// Parses `yyyy/MM/dd` (optionally with `HH:mm:ss`) or ISO-8601 timestamps, or
/// the given chrono format, into UTC seconds. Fractional seconds are dropped.
pub fn parse_timestamp(raw: &str, format: Option<&str>) -> Option<Timestamp> {
    let raw = raw.trim();
    if let Some(fmt) = format {
        if let Ok(dt) = DateTime::parse_from_str(raw, fmt) {
            return Some(dt.timestamp());
        }
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(Utc.from_utc_datetime(&dt).timestamp());
        }
        return NaiveDate::parse_from_str(raw, fmt)
            .ok()
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(|dt| Utc.from_utc_datetime(&dt).timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%dT%H:%M:%S%.f%z"] {
        if let Ok(dt) = DateTime::parse_from_str(raw, fmt) {
            return Some(dt.timestamp());
        }
    }
    for fmt in ["%Y/%m/%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(Utc.from_utc_datetime(&dt).timestamp());
        }
    }
    for fmt in ["%Y/%m/%d", "%Y-%m-%d"] {
        if let Ok(d) = NaiveDate::parse_from_str(raw, fmt) {
            return d.and_hms_opt(0, 0, 0).map(|dt| Utc.from_utc_datetime(&dt).timestamp());
        }
    }
    None
}

fn format_timestamp(ts: Timestamp) -> String {
    match Utc.timestamp_opt(ts, 0).single() {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.to_string(),
    }
}

/// Writes the real events of `log` as CSV with `case,event,time` followed by the
/// schema's numeric then nominal columns. Boundary events are omitted.
pub fn write_log_csv<W: Write>(log: &EventLog, out: W) -> Result<(), LogError> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["case".to_string(), "event".into(), "time".into()];
    header.extend(log.schema.numeric.iter().cloned());
    header.extend(log.schema.nominal_names().map(str::to_string));
    writer.write_record(&header)?;
    for record in log.cases.iter().flat_map(|c| c.real_events()) {
        let mut row = vec![record.case_id.clone(), record.label.clone(), format_timestamp(record.timestamp)];
        row.extend(record.numeric.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        row.extend(record.nominal.iter().map(|v| v.clone().unwrap_or_default()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
