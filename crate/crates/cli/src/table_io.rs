//! Count CSV reading and tabular output.
//!
//! Input schema: a header `a1,…,aQ[,l],count`, one row per level combination
//! with literal `0`/`1` levels and a nonnegative count. Rows may come in any
//! order and repeated level combinations are summed. Columns after `count`
//! are ignored, so `tabulate --format csv` output can be read back.

use std::io::Read;

use concentric::CountTable;

use crate::error::CliError;

pub fn read_counts<R: Read>(reader: R) -> Result<CountTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("line 1: {e}")))?
        .clone();
    let (leaves, root) = parse_header(&headers)?;
    let width = leaves + usize::from(root);
    let mut counts = vec![0.0; 1usize << width];

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < width + 1 {
            return Err(CliError::Data(format!(
                "line {line}: expected at least {} fields, found {}",
                width + 1,
                record.len()
            )));
        }
        let mut cell = 0usize;
        for (bit, field) in record.iter().take(width).enumerate() {
            match field {
                "0" => {}
                "1" => cell |= 1 << bit,
                other => {
                    return Err(CliError::Data(format!(
                        "line {line}: level `{other}` in column {} is not 0 or 1",
                        headers.get(bit).unwrap_or("?")
                    )))
                }
            }
        }
        let raw = &record[width];
        let count: f64 = raw
            .parse()
            .ok()
            .filter(|c: &f64| *c >= 0.0 && c.is_finite())
            .ok_or_else(|| CliError::Data(format!("line {line}: invalid count `{raw}`")))?;
        counts[cell] += count;
    }
    let table = CountTable::new(leaves, root, counts).map_err(CliError::from_data)?;
    if !(table.total() > 0.0) {
        return Err(CliError::Data("the table has no observations".into()));
    }
    Ok(table)
}

fn parse_header(headers: &csv::StringRecord) -> Result<(usize, bool), CliError> {
    let names: Vec<&str> = headers.iter().collect();
    let bad = |msg: String| CliError::Data(format!("line 1: {msg}"));
    let count_at = names
        .iter()
        .position(|&h| h == "count")
        .ok_or_else(|| bad("missing `count` column".into()))?;
    let levels = &names[..count_at];
    let root = levels.last() == Some(&"l");
    let leaves = levels.len() - usize::from(root);
    if leaves == 0 {
        return Err(bad("no leaf columns before `count`".into()));
    }
    for (i, &name) in levels[..leaves].iter().enumerate() {
        if name != format!("a{}", i + 1) {
            return Err(bad(format!("expected column `a{}`, found `{name}`", i + 1)));
        }
    }
    if leaves + 1 > concentric::model::MAX_VARIABLES {
        return Err(bad(format!("{leaves} leaves exceed the supported maximum")));
    }
    Ok((leaves, root))
}

/// Column names `a1,…,aQ[,l]`.
pub fn level_header(leaves: usize, root: bool) -> Vec<String> {
    let mut h: Vec<String> = (1..=leaves).map(|q| format!("a{q}")).collect();
    if root {
        h.push("l".into());
    }
    h
}

/// Levels of cell `t` as `"0"`/`"1"` strings, leaf 1 first.
pub fn level_strings(t: usize, width: usize) -> Vec<String> {
    (0..width).map(|b| ((t >> b) & 1).to_string()).collect()
}

/// Renders rows as CSV.
pub fn render_csv(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders rows as a whitespace-aligned plain-text table.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_observed_root_table() {
        let text = "a1,a2,l,count\n0,0,0,9\n1,0,0,3\n0,1,0,3\n1,1,0,1\n0,0,1,1\n1,0,1,3\n0,1,1,3\n1,1,1,9\n";
        let t = read_counts(text.as_bytes()).unwrap();
        assert_eq!(t.leaves(), 2);
        assert!(t.root_observed());
        assert_eq!(t.counts(), &[9.0, 3.0, 3.0, 1.0, 1.0, 3.0, 3.0, 9.0]);
    }

    #[test]
    fn sums_duplicates_and_allows_any_order() {
        let text = "a1,a2,count\n1,1,4\n0,0,2\n1,1,6\n";
        let t = read_counts(text.as_bytes()).unwrap();
        assert!(!t.root_observed());
        assert_eq!(t.counts(), &[2.0, 0.0, 0.0, 10.0]);
    }

    #[test]
    fn ignores_trailing_columns() {
        let text = "a1,l,count,integer\n0,0,0.375,3\n1,0,0.125,1\n0,1,0.125,1\n1,1,0.375,3\n";
        let t = read_counts(text.as_bytes()).unwrap();
        assert_eq!(t.counts(), &[0.375, 0.125, 0.125, 0.375]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = read_counts("a1,a2,count\n0,0,1\n0,2,3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert_eq!(err.exit_code(), 3);
        let err = read_counts("a1,a2,count\n0,0,-1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = read_counts("a1,a2,count\n0,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_bad_headers() {
        for text in ["a1,a3,count\n", "a1,a2,n\n", "l,count\n", "count\n"] {
            assert!(read_counts(text.as_bytes()).is_err(), "{text}");
        }
        assert!(read_counts("a1,a2,count\n".as_bytes()).is_err());
    }

    #[test]
    fn table_rendering() {
        let h = vec!["x".to_string(), "value".to_string()];
        let rows = vec![vec!["1".to_string(), "0.5".to_string()]];
        assert_eq!(render_table(&h, &rows), "x  value\n1    0.5\n");
        assert_eq!(render_csv(&h, &rows).unwrap(), "x,value\n1,0.5\n");
    }
}
