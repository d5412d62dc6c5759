//! Record, null-distribution and privatized-report files.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};

use ldp_chisq::mechanisms::{BitVector, MechanismKind, MechanismName, OneHotRecord, PrivateReport, ReportPayload};
use ldp_chisq::stats::ProbabilityVector;

use crate::error::{data, CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

fn open(path: &str) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|e| CliError::io(path, e))
}

pub fn write_output(path: Option<&str>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout().write_all(contents.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(source)
}

fn column_indices(headers: &csv::StringRecord, names: &[&str], path: &str) -> CliResult<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| {
                CliError::Data(format!("{path}: line 1: missing header column '{name}'"))
            })
        })
        .collect()
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_index(field: &str, limit: usize, what: &str, path: &str, line: u64) -> CliResult<usize> {
    let value: usize = field
        .parse()
        .map_err(|_| CliError::Data(format!("{path}: line {line}: {what} '{field}' is not a nonnegative integer")))?;
    if value >= limit {
        return data(format!("{path}: line {line}: {what} {value} out of range [0, {limit})"));
    }
    Ok(value)
}

/// Reads a `category` column; every value must lie in `[0, d)`.
pub fn read_categories(path: &str, d: usize) -> CliResult<Vec<OneHotRecord>> {
    let mut reader = csv_reader(open(path)?);
    let headers = reader.headers().map_err(|e| CliError::Data(format!("{path}: {e}")))?.clone();
    let col = column_indices(&headers, &["category"], path)?[0];
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        let line = line_of(&row);
        let j = parse_index(row.get(col).unwrap_or(""), d, "category", path, line)?;
        out.push(OneHotRecord::new(j, d)?);
    }
    if out.is_empty() {
        return data(format!("{path}: no records"));
    }
    Ok(out)
}

/// Reads `row,col` columns into `(row, col)` pairs.
pub fn read_pairs(path: &str, rows: usize, cols: usize) -> CliResult<Vec<(usize, usize)>> {
    let mut reader = csv_reader(open(path)?);
    let headers = reader.headers().map_err(|e| CliError::Data(format!("{path}: {e}")))?.clone();
    let idx = column_indices(&headers, &["row", "col"], path)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        let line = line_of(&row);
        let i = parse_index(row.get(idx[0]).unwrap_or(""), rows, "row", path, line)?;
        let j = parse_index(row.get(idx[1]).unwrap_or(""), cols, "col", path, line)?;
        out.push((i, j));
    }
    if out.is_empty() {
        return data(format!("{path}: no records"));
    }
    Ok(out)
}

/// Reads null probabilities separated by commas, whitespace or newlines;
/// `#` starts a comment.
pub fn read_null(path: &str) -> CliResult<ProbabilityVector> {
    let mut values = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let content = line.split('#').next().unwrap_or("");
        for token in content.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v: f64 = token
                .parse()
                .map_err(|_| CliError::Data(format!("{path}: line {}: '{token}' is not a number", i + 1)))?;
            values.push(v);
        }
    }
    Ok(ProbabilityVector::new(values)?)
}

/// Header metadata of a privatized-report file.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedMeta {
    pub mechanism: MechanismKind,
    pub d: usize,
    pub table: Option<(usize, usize)>,
}

fn meta_line(meta: &PrivatizedMeta) -> String {
    let mut line = format!(
        "# format_version={FORMAT_VERSION} mechanism={} parameter={} d={}",
        meta.mechanism.name(),
        meta.mechanism.parameter(),
        meta.d
    );
    if let Some((r, c)) = meta.table {
        line.push_str(&format!(" rows={r} cols={c}"));
    }
    line
}

fn payload_columns(mechanism: MechanismKind, d: usize) -> Vec<String> {
    match mechanism {
        MechanismKind::Exponential { .. } => vec!["category".into()],
        MechanismKind::BitFlip { .. } => vec!["bits".into()],
        _ => (0..d).map(|j| format!("v{j}")).collect(),
    }
}

/// Serializes reports as CSV after a `#` metadata line.
pub fn write_privatized(meta: &PrivatizedMeta, reports: &[PrivateReport]) -> CliResult<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Data(format!("writing reports: {e}"));
    writer.write_record(payload_columns(meta.mechanism, meta.d)).map_err(csv_err)?;
    for r in reports {
        let fields: Vec<String> = match &r.payload {
            ReportPayload::Vector(v) => v.iter().map(|x| x.to_string()).collect(),
            ReportPayload::Category(c) => vec![c.index().to_string()],
            ReportPayload::Bits(b) => vec![b.to_string()],
        };
        writer.write_record(fields).map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| CliError::Data(format!("writing reports: {e}")))?;
    Ok(format!("{}\n{}", meta_line(meta), String::from_utf8(body).expect("csv output is utf-8")))
}

fn parse_meta(line: &str, path: &str) -> CliResult<PrivatizedMeta> {
    let bad = |msg: &str| CliError::Data(format!("{path}: line 1: {msg}"));
    let body = line.strip_prefix('#').ok_or_else(|| bad("missing '# format_version=…' metadata line"))?;
    let mut fields = std::collections::HashMap::new();
    for token in body.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| bad(&format!("malformed metadata '{token}'")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("metadata lacks '{k}'")));
    let version: u32 = get("format_version")?.parse().map_err(|_| bad("bad format_version"))?;
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format_version {version}")));
    }
    let name: MechanismName = get("mechanism")?.parse()?;
    let parameter: f64 = get("parameter")?.parse().map_err(|_| bad("bad parameter"))?;
    let d: usize = get("d")?.parse().map_err(|_| bad("bad d"))?;
    let table = match (fields.get("rows"), fields.get("cols")) {
        (Some(r), Some(c)) => Some((r.parse().map_err(|_| bad("bad rows"))?, c.parse().map_err(|_| bad("bad cols"))?)),
        _ => None,
    };
    Ok(PrivatizedMeta { mechanism: MechanismKind::from_name(name, parameter)?, d, table })
}

/// Reads a file written by [`write_privatized`].
pub fn read_privatized(path: &str) -> CliResult<(PrivatizedMeta, Vec<PrivateReport>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    let meta = parse_meta(first, path)?;
    let mut reader = csv_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Data(format!("{path}: {e}")))?.clone();
    let expected = payload_columns(meta.mechanism, meta.d);
    let names: Vec<&str> = expected.iter().map(String::as_str).collect();
    let idx = column_indices(&headers, &names, path)?;
    let mut reports = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        let line = line_of(&row);
        let field = |k: usize| row.get(idx[k]).unwrap_or("");
        let payload = match meta.mechanism {
            MechanismKind::Exponential { .. } => {
                let j = parse_index(field(0), meta.d, "category", path, line)?;
                ReportPayload::Category(OneHotRecord::new(j, meta.d)?)
            }
            MechanismKind::BitFlip { .. } => {
                let bits = BitVector::parse(field(0))
                    .map_err(|e| CliError::Data(format!("{path}: line {line}: {e}")))?;
                if bits.len() != meta.d {
                    return data(format!("{path}: line {line}: expected {} bits, got {}", meta.d, bits.len()));
                }
                ReportPayload::Bits(bits)
            }
            _ => {
                let v = (0..meta.d)
                    .map(|k| {
                        field(k)
                            .parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| CliError::Data(format!("{path}: line {line}: v{k} is not a finite number")))
                    })
                    .collect::<CliResult<Vec<f64>>>()?;
                ReportPayload::Vector(v)
            }
        };
        reports.push(PrivateReport { payload, mechanism: meta.mechanism });
    }
    if reports.is_empty() {
        return data(format!("{path}: no reports"));
    }
    Ok((meta, reports))
}
