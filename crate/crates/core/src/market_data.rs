//! Ingestion, validation, and chronological splitting of daily
//! adjusted-close price series.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Dollars;

/// One trading day: calendar date and dividend/split-adjusted close.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub adj_close: Dollars,
}

/// An ordered series of daily bars for one ticker.
///
/// Bars are strictly increasing by date with no duplicates. Parsed series
/// have at least two bars; split sides may have one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceSeries {
    ticker: String,
    bars: Vec<Bar>,
}

/// Chronological train/test partition of a series.
#[derive(Debug, Clone)]
pub struct SplitSeries {
    pub train: PriceSeries,
    pub test: PriceSeries,
    pub split_ratio: f64,
}

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("missing required column '{0}' in header")]
    MissingColumn(&'static str),
    #[error("invalid date '{value}' at row {row}")]
    InvalidDate { row: u64, value: String },
    #[error("invalid price '{value}' at row {row}")]
    InvalidPrice { row: u64, value: String },
    #[error("non-positive price at row {row}")]
    NonPositivePrice { row: u64 },
    #[error("duplicate date {date} at row {row}")]
    DuplicateDate { row: u64, date: NaiveDate },
    #[error("series has {0} bars; need at least 2")]
    TooShort(usize),
    #[error("bars not strictly increasing by date at index {0}")]
    OutOfOrder(usize),
    #[error("split ratio {0} outside (0, 1)")]
    RatioOutOfRange(f64),
    #[error("cannot split {len} bars at ratio {ratio}: {side} side is empty")]
    SplitEmpty {
        len: usize,
        ratio: f64,
        side: &'static str,
    },
}

impl PriceSeries {
    /// Validates order, uniqueness, and positivity. Accepts one-bar series
    /// so split sides can be represented; use `parse_csv` for ingestion,
    /// which additionally requires two bars.
    pub fn new(ticker: impl Into<String>, bars: Vec<Bar>) -> Result<Self, MarketDataError> {
        if bars.is_empty() {
            return Err(MarketDataError::TooShort(0));
        }
        for (i, w) in bars.windows(2).enumerate() {
            if w[1].date <= w[0].date {
                if w[1].date == w[0].date {
                    return Err(MarketDataError::DuplicateDate {
                        row: i as u64 + 2,
                        date: w[1].date,
                    });
                }
                return Err(MarketDataError::OutOfOrder(i + 1));
            }
        }
        if let Some(i) = bars.iter().position(|b| !b.adj_close.is_positive()) {
            return Err(MarketDataError::NonPositivePrice { row: i as u64 + 1 });
        }
        Ok(Self {
            ticker: ticker.into(),
            bars,
        })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.bars.iter().map(|b| b.date)
    }

    /// Adjusted closes as `f64`, in order. The model-space view of the series.
    pub fn closes_f64(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.adj_close.to_f64()).collect()
    }

    /// Writes the series back out as `Date,Adj Close` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "Date,Adj Close")?;
        for bar in &self.bars {
            writeln!(out, "{},{}", bar.date, bar.adj_close)?;
        }
        Ok(())
    }
}

fn normalize_header(name: &str) -> String {
    name.trim()
        .chars()
        .filter(|c| *c != ' ' && *c != '_')
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// Parses a vendor CSV with a header row into a `PriceSeries`.
///
/// The date column must be named `Date`; the price column accepts
/// `Adj Close`, `AdjClose`, or `adj_close`, all case-insensitively.
/// Unsorted rows are sorted by date; duplicate dates are an error.
/// Row numbers in errors are file line numbers (header is line 1).
pub fn parse_csv(path: impl AsRef<Path>, ticker: &str) -> Result<PriceSeries, MarketDataError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| MarketDataError::Io {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);

    let headers = reader
        .headers()
        .map_err(|source| MarketDataError::Csv {
            path: display.clone(),
            source,
        })?
        .clone();
    let date_col = headers
        .iter()
        .position(|h| normalize_header(h) == "date")
        .ok_or(MarketDataError::MissingColumn("Date"))?;
    let price_col = headers
        .iter()
        .position(|h| normalize_header(h) == "adjclose")
        .ok_or(MarketDataError::MissingColumn("Adj Close"))?;

    let mut rows: Vec<(NaiveDate, Dollars, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| MarketDataError::Csv {
            path: display.clone(),
            source,
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let date_str = record.get(date_col).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d").map_err(|_| {
            MarketDataError::InvalidDate {
                row,
                value: date_str.to_owned(),
            }
        })?;
        let price_str = record.get(price_col).unwrap_or("").trim();
        let price: Dollars = price_str
            .parse()
            .map_err(|_| MarketDataError::InvalidPrice {
                row,
                value: price_str.to_owned(),
            })?;
        if !price.is_positive() {
            return Err(MarketDataError::NonPositivePrice { row });
        }
        rows.push((date, price, row));
    }

    rows.sort_by_key(|(date, _, _)| *date);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(MarketDataError::DuplicateDate {
                row: w[1].2,
                date: w[1].0,
            });
        }
    }
    if rows.len() < 2 {
        return Err(MarketDataError::TooShort(rows.len()));
    }
    let bars = rows
        .into_iter()
        .map(|(date, adj_close, _)| Bar { date, adj_close })
        .collect();
    PriceSeries::new(ticker, bars)
}

/// Chronological split: train is the first `floor(ratio * len)` bars, test
/// is the remainder. No shuffling; test starts right after the last train bar.
pub fn split_train_test(series: &PriceSeries, ratio: f64) -> Result<SplitSeries, MarketDataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MarketDataError::RatioOutOfRange(ratio));
    }
    let len = series.len();
    let train_len = (ratio * len as f64).floor() as usize;
    if train_len == 0 {
        return Err(MarketDataError::SplitEmpty {
            len,
            ratio,
            side: "train",
        });
    }
    if train_len >= len {
        return Err(MarketDataError::SplitEmpty {
            len,
            ratio,
            side: "test",
        });
    }
    let train = PriceSeries {
        ticker: series.ticker.clone(),
        bars: series.bars[..train_len].to_vec(),
    };
    let test = PriceSeries {
        ticker: series.ticker.clone(),
        bars: series.bars[train_len..].to_vec(),
    };
    Ok(SplitSeries {
        train,
        test,
        split_ratio: ratio,
    })
}
