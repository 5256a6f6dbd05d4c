//! Report tables: rounded CSV, full-precision CSV and aligned text.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use csv::WriterBuilder;

use crate::counterfactual::{ComplianceRow, PriceSummary, SimulationReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Currency(f64),
    /// Fraction shown as a percentage.
    Percent(f64),
    Number(f64, usize),
    Count(f64),
}

impl Cell {
    fn rounded(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Currency(v) => format_currency(*v),
            Cell::Percent(v) => format_percent(*v),
            Cell::Number(v, digits) => format!("{v:.digits$}"),
            Cell::Count(v) => group_thousands(&format!("{v:.0}")),
        }
    }

    fn full(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Currency(v) | Cell::Percent(v) | Cell::Number(v, _) | Cell::Count(v) => v.to_string(),
        }
    }

    fn is_text(&self) -> bool {
        matches!(self, Cell::Text(_))
    }
}

fn group_thousands(digits: &str) -> String {
    let (sign, rest) = match digits.strip_prefix('-') {
        Some(r) => ("-", r),
        None => ("", digits),
    };
    let (int, frac) = match rest.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (rest, None),
    };
    let mut out = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    match frac {
        Some(f) => format!("{sign}{out}.{f}"),
        None => format!("{sign}{out}"),
    }
}

/// `1234.5` -> `$1,234.50`; negative amounts get a leading minus.
pub fn format_currency(v: f64) -> String {
    let cents = format!("{:.2}", v.abs());
    let sign = if v < 0.0 && cents != "0.00" { "-" } else { "" };
    format!("{sign}${}", group_thousands(&cents))
}

/// `0.2` -> `20.00%`.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}%", fraction * 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ReportTable {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        ReportTable {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let rendered: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::rounded).collect()).collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for r in &rendered {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = format!("{}\n", self.title);
        let header: Vec<String> = self
            .columns
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(header.join("  ").trim_end());
        out.push('\n');
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("  "));
        out.push('\n');
        for (r, cells) in rendered.iter().zip(&self.rows) {
            let line: Vec<String> = r
                .iter()
                .zip(cells)
                .zip(&widths)
                .map(|((s, c), w)| if c.is_text() { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    fn write_csv(&self, path: &FsPath, full: bool) -> Result<()> {
        let mut w = WriterBuilder::new().from_path(path)?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|c| if full { c.full() } else { c.rounded() }))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes `<stem>.csv`, `<stem>_full.csv` and `<stem>.txt` into `dir`.
pub fn write_table(table: &ReportTable, dir: &FsPath, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(Error::file(dir))?;
    let paths = vec![
        dir.join(format!("{stem}.csv")),
        dir.join(format!("{stem}_full.csv")),
        dir.join(format!("{stem}.txt")),
    ];
    table.write_csv(&paths[0], false)?;
    table.write_csv(&paths[1], true)?;
    fs::write(&paths[2], table.to_text()).map_err(Error::file(&paths[2]))?;
    Ok(paths)
}

pub fn compliance_table_view(rows: &[ComplianceRow]) -> ReportTable {
    let mut t = ReportTable::new("Traffic and revenue under full compliance", &["period", "traffic", "revenue"]);
    for r in rows {
        t.push(vec![Cell::Text(r.period.clone()), Cell::Count(r.traffic), Cell::Currency(r.revenue)]);
    }
    t
}

pub fn price_summary_view(rows: &[(String, String, PriceSummary)]) -> ReportTable {
    let mut t = ReportTable::new(
        "Ticket price summary",
        &[
            "period",
            "scheme",
            "pairs",
            "min",
            "median",
            "max",
            "below_legacy",
            "below_legacy_weighted",
        ],
    );
    for (period, scheme, s) in rows {
        t.push(vec![
            Cell::Text(period.clone()),
            Cell::Text(scheme.clone()),
            Cell::Count(s.pairs as f64),
            Cell::Currency(s.min),
            Cell::Currency(s.median),
            Cell::Currency(s.max),
            Cell::Percent(s.share_below_legacy),
            Cell::Percent(s.share_below_legacy_weighted),
        ]);
    }
    t
}

pub fn scenario_view(reports: &[SimulationReport]) -> ReportTable {
    let mut t = ReportTable::new(
        "Strategic passengers by scenario",
        &[
            "period",
            "pricing",
            "monitoring",
            "model",
            "fine",
            "fully_paid",
            "partially_paid",
            "unpaid",
            "revenue",
            "partial_loss",
            "no_ticket_loss",
            "loss_share",
            "loss_vs_legacy",
        ],
    );
    for r in reports {
        t.push(vec![
            Cell::Text(r.period.clone()),
            Cell::Text(r.pricing.to_string()),
            Cell::Text(r.monitoring.to_string()),
            Cell::Text(r.model.to_string()),
            Cell::Currency(r.alpha),
            Cell::Percent(r.share_fully_paid()),
            Cell::Percent(r.share_partially_paid()),
            Cell::Percent(r.share_unpaid()),
            Cell::Currency(r.revenue),
            Cell::Currency(r.partial_loss),
            Cell::Currency(r.no_ticket_loss),
            Cell::Percent(r.loss_share()),
            Cell::Percent(r.loss_vs_legacy()),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn money_and_percent_formats() {
        assert_eq!(format_currency(210.6), "$210.60");
        assert_eq!(format_currency(2_353_948.0), "$2,353,948.00");
        assert_eq!(format_currency(-1.5), "-$1.50");
        assert_eq!(format_currency(-0.001), "$0.00");
        assert_eq!(format_percent(0.2), "20.00%");
        assert_eq!(format_percent(0.65517), "65.52%");
    }

    #[test]
    fn empty_table_has_header_only() {
        let t = ReportTable::new("Empty", &["a", "b"]);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_table(&t, dir.path(), "empty").unwrap();
        assert_eq!(fs::read_to_string(&paths[0]).unwrap(), "a,b\n");
        assert_eq!(fs::read_to_string(&paths[1]).unwrap(), "a,b\n");
    }
}
