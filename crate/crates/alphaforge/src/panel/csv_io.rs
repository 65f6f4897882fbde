//! CSV ingestion: header `date,symbol,open,high,low,close,volume,vwap`,
//! one row per (date, symbol), empty field = missing, UTF-8.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::dsl::FeatureField;
use crate::num::Scalar;

use super::{PanelError, PanelOf};

const HEADER: [&str; 8] = [
    "date", "symbol", "open", "high", "low", "close", "volume", "vwap",
];

pub fn ingest_csv<F: Scalar>(path: &Path) -> Result<PanelOf<F>, PanelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(PanelError::MalformedRow {
            line: 1,
            reason: format!("expected header {}", HEADER.join(",")),
        });
    }

    struct Row {
        date: String,
        symbol: String,
        values: [f64; 6],
    }

    let mut rows: Vec<Row> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // 1-based, after header
        let record = record?;
        if record.len() != 8 {
            return Err(PanelError::MalformedRow {
                line,
                reason: format!("expected 8 fields, got {}", record.len()),
            });
        }
        let mut values = [f64::NAN; 6];
        for (j, v) in values.iter_mut().enumerate() {
            let field = record.get(j + 2).unwrap_or("").trim();
            if !field.is_empty() {
                *v = field.parse().map_err(|_| PanelError::MalformedRow {
                    line,
                    reason: format!("unparseable number {field:?}"),
                })?;
            }
        }
        rows.push(Row {
            date: record[0].to_string(),
            symbol: record[1].to_string(),
            values,
        });
    }
    if rows.is_empty() {
        return Err(PanelError::EmptyFile);
    }

    let mut seen = HashSet::new();
    for r in &rows {
        if !seen.insert((r.date.clone(), r.symbol.clone())) {
            return Err(PanelError::DuplicateCell {
                date: r.date.clone(),
                symbol: r.symbol.clone(),
            });
        }
    }

    let dates: Vec<String> = rows
        .iter()
        .map(|r| r.date.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let symbols: Vec<String> = rows
        .iter()
        .map(|r| r.symbol.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut panel = PanelOf::new(symbols, dates)?;
    for r in rows {
        let si = panel.symbols().iter().position(|s| *s == r.symbol).unwrap();
        let ti = panel.date_index(&r.date).unwrap();
        for (j, feature) in FeatureField::ALL.into_iter().enumerate() {
            panel
                .feature_mut(feature)
                .set(si, ti, F::from_f64_c(r.values[j]));
        }
    }
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const HEADER_LINE: &str = "date,symbol,open,high,low,close,volume,vwap\n";

    #[test]
    fn full_panel_has_no_missing_cells() {
        let mut body = String::from(HEADER_LINE);
        for d in ["2020-01-01", "2020-01-02", "2020-01-03"] {
            for s in ["AAA", "BBB"] {
                body.push_str(&format!("{d},{s},1,2,0.5,1.5,100,1.2\n"));
            }
        }
        let f = write_csv(&body);
        let p: PanelOf<f64> = ingest_csv(f.path()).unwrap();
        assert_eq!(p.n_symbols(), 2);
        assert_eq!(p.n_dates(), 3);
        for feat in FeatureField::ALL {
            assert_eq!(p.feature(feat).valid_count(), 6);
        }
    }

    #[test]
    fn absent_row_becomes_masked_cell() {
        let body = format!(
            "{HEADER_LINE}2020-01-01,AAA,1,2,0.5,1.5,100,1.2\n\
             2020-01-01,BBB,1,2,0.5,1.5,100,1.2\n\
             2020-01-02,AAA,1,2,0.5,1.5,100,1.2\n"
        );
        let f = write_csv(&body);
        let p: PanelOf<f64> = ingest_csv(f.path()).unwrap();
        let close = p.feature(FeatureField::Close);
        assert!(close.is_valid(0, 0));
        assert!(close.is_valid(0, 1));
        assert!(close.is_valid(1, 0));
        assert!(!close.is_valid(1, 1)); // BBB on the 2nd is absent
    }

    #[test]
    fn duplicate_cell_is_an_error() {
        let body = format!(
            "{HEADER_LINE}2020-01-01,AAA,1,2,0.5,1.5,100,1.2\n\
             2020-01-01,AAA,1,2,0.5,1.5,100,1.2\n"
        );
        let f = write_csv(&body);
        assert!(matches!(
            ingest_csv::<f64>(f.path()),
            Err(PanelError::DuplicateCell { .. })
        ));
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_csv(HEADER_LINE);
        assert!(matches!(
            ingest_csv::<f64>(f.path()),
            Err(PanelError::EmptyFile)
        ));
    }

    #[test]
    fn empty_field_is_missing() {
        let body = format!("{HEADER_LINE}2020-01-01,AAA,1,2,0.5,,100,1.2\n");
        let f = write_csv(&body);
        let p: PanelOf<f64> = ingest_csv(f.path()).unwrap();
        assert!(!p.feature(FeatureField::Close).is_valid(0, 0));
        assert!(p.feature(FeatureField::Open).is_valid(0, 0));
    }

    #[test]
    fn unsorted_rows_are_aligned() {
        let body = format!(
            "{HEADER_LINE}2020-01-02,AAA,2,2,2,2,100,2\n\
             2020-01-01,AAA,1,1,1,1,100,1\n"
        );
        let f = write_csv(&body);
        let p: PanelOf<f64> = ingest_csv(f.path()).unwrap();
        assert_eq!(p.dates(), &["2020-01-01", "2020-01-02"]);
        assert_eq!(p.feature(FeatureField::Close).row(0), &[1.0, 2.0]);
    }
}
