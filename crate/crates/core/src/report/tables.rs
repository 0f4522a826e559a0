use std::collections::BTreeMap;

use super::fmt_fixed;
use crate::metrics::SummaryTable;

pub const VALUE_DECIMALS: usize = 3;
pub const MEAN_DECIMALS: usize = 4;
const MEAN_COL: &str = "Mean across datasets";
const MEAN_ROW: &str = "Mean across models";

/// Dataset names sorted by ascending sample size; ties by name.
pub fn order_by_size(datasets: &[String], sizes: &BTreeMap<String, usize>) -> Vec<String> {
    let mut out = datasets.to_vec();
    out.sort_by(|a, b| (sizes.get(a), a).cmp(&(sizes.get(b), b)));
    out
}

/// Copy of `table` with columns rearranged into `order`.
pub fn reorder(table: &SummaryTable, order: &[String]) -> SummaryTable {
    let idx: Vec<usize> = order
        .iter()
        .map(|d| table.datasets.iter().position(|x| x == d).expect("order names a table dataset"))
        .collect();
    let values = table.values.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect();
    SummaryTable::new(table.models.clone(), order.to_vec(), values)
}

fn cells(t: &SummaryTable, na: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["Model".to_string()];
    header.extend(t.datasets.iter().cloned());
    header.push(MEAN_COL.to_string());
    if t.models.is_empty() {
        return (header, Vec::new());
    }
    let f = |v: Option<f64>, dec| v.map(|x| fmt_fixed(x, dec)).unwrap_or_else(|| na.to_string());
    let mut rows: Vec<Vec<String>> = t
        .models
        .iter()
        .zip(&t.values)
        .zip(&t.row_means)
        .map(|((m, vals), mean)| {
            let mut r = vec![m.clone()];
            r.extend(vals.iter().map(|&v| f(v, VALUE_DECIMALS)));
            r.push(f(*mean, MEAN_DECIMALS));
            r
        })
        .collect();
    let mut last = vec![MEAN_ROW.to_string()];
    last.extend(t.col_means.iter().map(|&v| f(v, VALUE_DECIMALS)));
    last.push(String::new());
    rows.push(last);
    (header, rows)
}

pub fn table_csv(t: &SummaryTable) -> String {
    let (header, rows) = cells(t, "");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn table_markdown(t: &SummaryTable) -> String {
    let (header, rows) = cells(t, "NA");
    let line = |r: &[String]| format!("| {} |\n", r.join(" | "));
    let mut out = line(&header);
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        out.push_str(&line(&r));
    }
    out
}
