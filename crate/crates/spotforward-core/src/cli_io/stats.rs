//! Quote files and per-tenor statistics of the annualized forward ratio.

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const QUOTES_HEADER: [&str; 6] =
    ["date", "tenor_months", "fwd_onshore", "fwd_offshore", "spot_onshore", "spot_offshore"];

pub const TENORS: [u32; 5] = [1, 2, 3, 6, 12];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteRow {
    pub date: NaiveDate,
    pub tenor_months: u32,
    pub forward_onshore: f64,
    pub forward_offshore: f64,
    pub spot_onshore: f64,
    pub spot_offshore: f64,
}

impl QuoteRow {
    pub fn check(&self) -> Result<()> {
        if !TENORS.contains(&self.tenor_months) {
            return Err(Error::invalid("tenor_months", "tenor must be one of 1, 2, 3, 6, 12"));
        }
        let prices = [
            ("fwd_onshore", self.forward_onshore),
            ("fwd_offshore", self.forward_offshore),
            ("spot_onshore", self.spot_onshore),
            ("spot_offshore", self.spot_offshore),
        ];
        for (f, p) in prices {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::invalid(f, "price must be strictly positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeStats {
    pub tenor_months: u32,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1`), zero for a single row.
    pub std: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub spot_log_ratio_mean: f64,
}

/// `(12/tenor) ln(F^Y/F^H)`.
pub fn annualized_ratio(row: &QuoteRow) -> Result<f64> {
    row.check()?;
    Ok(12.0 / row.tenor_months as f64 * (row.forward_onshore / row.forward_offshore).ln())
}

/// Linear interpolation between order statistics (`h = (n−1)p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Per-tenor statistics, ordered by tenor. Tenors without rows produce a
/// warning string instead of a record.
pub fn wedge_stats(rows: &[QuoteRow]) -> Result<(Vec<WedgeStats>, Vec<String>)> {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for tenor in TENORS {
        let group: Vec<&QuoteRow> = rows.iter().filter(|r| r.tenor_months == tenor).collect();
        if group.is_empty() {
            warnings.push(format!("tenor {tenor}: no quotes, skipped"));
            continue;
        }
        let mut r = group.iter().map(|q| annualized_ratio(q)).collect::<Result<Vec<f64>>>()?;
        let spot: Vec<f64> = group.iter().map(|q| (q.spot_onshore / q.spot_offshore).ln()).collect();
        let mu = mean(&r);
        let std = if r.len() > 1 {
            (r.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        r.sort_by(f64::total_cmp);
        out.push(WedgeStats {
            tenor_months: tenor,
            count: r.len(),
            mean: mu,
            std,
            q25: quantile_sorted(&r, 0.25),
            median: quantile_sorted(&r, 0.5),
            q75: quantile_sorted(&r, 0.75),
            spot_log_ratio_mean: mean(&spot),
        });
    }
    Ok((out, warnings))
}

/// Reads a quotes CSV with the exact header
/// `date,tenor_months,fwd_onshore,fwd_offshore,spot_onshore,spot_offshore`.
pub fn read_quotes<R: Read>(reader: R) -> Result<Vec<QuoteRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Config(format!("quotes: {e}")))?.clone();
    if header.iter().collect::<Vec<_>>() != QUOTES_HEADER {
        return Err(Error::Config(format!(
            "quotes: header must be '{}'",
            QUOTES_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Config(format!("quotes line {line}: {e}")))?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("quotes line {line}: {} '{}' is not a number", QUOTES_HEADER[j], &rec[j])))
        };
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| Error::Config(format!("quotes line {line}: bad date '{}'", &rec[0])))?;
        let tenor = rec[1]
            .parse::<u32>()
            .map_err(|_| Error::Config(format!("quotes line {line}: bad tenor '{}'", &rec[1])))?;
        let row = QuoteRow {
            date,
            tenor_months: tenor,
            forward_onshore: num(2)?,
            forward_offshore: num(3)?,
            spot_onshore: num(4)?,
            spot_offshore: num(5)?,
        };
        row.check().map_err(|e| Error::Config(format!("quotes line {line}: {e}")))?;
        rows.push(row);
    }
    Ok(rows)
}
