//! Deterministic single-share, long-only trade simulation for the three
//! strategies, with exact decimal accounting throughout.
//!
//! Strategy 1 trades the sign of the predicted one-day change: buy when
//! tomorrow's prediction is above today's, sell at a predicted local
//! peak, all fills at actual closes. Strategy 2 buys at the close of
//! every breakout day and exits a fixed number of trading days later.
//! Open positions at end of data are liquidated at the final close and
//! flagged as forced exits.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::AnomalyLabel;
use crate::market_data::PriceSeries;
use crate::money::Dollars;
use crate::predictor::PredictionSeries;

/// Strategy identifiers as published: 0 buy-and-hold, 1 prediction, 2 breakout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    BuyAndHold,
    Prediction,
    Breakout,
}

impl Strategy {
    pub fn id(self) -> u8 {
        match self {
            Strategy::BuyAndHold => 0,
            Strategy::Prediction => 1,
            Strategy::Breakout => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Strategy::BuyAndHold),
            1 => Some(Strategy::Prediction),
            2 => Some(Strategy::Breakout),
            _ => None,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::BuyAndHold => write!(f, "Buy & Hold"),
            Strategy::Prediction => write!(f, "Strategy 1"),
            Strategy::Breakout => write!(f, "Strategy 2"),
        }
    }
}

/// One round trip. `pnl` is derived, so it can never drift from the fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub entry_date: NaiveDate,
    pub entry_price: Dollars,
    pub exit_date: NaiveDate,
    pub exit_price: Dollars,
    /// End-of-data liquidation rather than a strategy exit.
    pub forced_exit: bool,
}

impl Trade {
    pub fn pnl(&self) -> Dollars {
        self.exit_price - self.entry_price
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenPosition {
    pub entry_date: NaiveDate,
    pub entry_price: Dollars,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("cannot buy while already holding a share")]
    AlreadyHolding,
    #[error("cannot sell while flat")]
    NotHolding,
    #[error("exit date {exit} is not after entry date {entry}")]
    ExitNotAfterEntry { entry: NaiveDate, exit: NaiveDate },
    #[error("trade {index} opens before the previous trade closed")]
    Overlap { index: usize },
}

/// Ordered trade record enforcing the one-share, long-only constraint:
/// at most one share held, never sell while flat, no overlapping trades.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    trades: Vec<Trade>,
    position: Option<OpenPosition>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn trades(&self) -> &[Trade] {
        &self.trades
    }

    pub fn position(&self) -> Option<&OpenPosition> {
        self.position.as_ref()
    }

    pub fn buy(&mut self, date: NaiveDate, price: Dollars) -> Result<(), LedgerError> {
        if self.position.is_some() {
            return Err(LedgerError::AlreadyHolding);
        }
        self.position = Some(OpenPosition {
            entry_date: date,
            entry_price: price,
        });
        Ok(())
    }

    pub fn sell(
        &mut self,
        date: NaiveDate,
        price: Dollars,
        forced: bool,
    ) -> Result<(), LedgerError> {
        let open = self.position.take().ok_or(LedgerError::NotHolding)?;
        if date <= open.entry_date {
            self.position = Some(open);
            return Err(LedgerError::ExitNotAfterEntry {
                entry: open.entry_date,
                exit: date,
            });
        }
        self.trades.push(Trade {
            entry_date: open.entry_date,
            entry_price: open.entry_price,
            exit_date: date,
            exit_price: price,
            forced_exit: forced,
        });
        Ok(())
    }

    /// Full invariant recheck from scratch, for property suites.
    pub fn validate(&self) -> Result<(), LedgerError> {
        for (i, t) in self.trades.iter().enumerate() {
            if t.exit_date <= t.entry_date {
                return Err(LedgerError::ExitNotAfterEntry {
                    entry: t.entry_date,
                    exit: t.exit_date,
                });
            }
            if i > 0 && t.entry_date < self.trades[i - 1].exit_date {
                return Err(LedgerError::Overlap { index: i });
            }
        }
        if let (Some(open), Some(last)) = (&self.position, self.trades.last()) {
            if open.entry_date < last.exit_date {
                return Err(LedgerError::Overlap {
                    index: self.trades.len(),
                });
            }
        }
        Ok(())
    }
}

/// Table-style summary row. Buy-and-hold is a single transaction, so its
/// count columns are not applicable and serialize as nulls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub profitable: Option<u32>,
    pub unprofitable: Option<u32>,
    pub total: Option<u32>,
    /// Fraction of profitable trades; `None` when there were no trades
    /// or counts do not apply.
    pub success_rate: Option<f64>,
    pub profit: Dollars,
    pub forced_exits: Option<u32>,
}

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("series has {0} bars; need at least 2")]
    SeriesTooShort(usize),
    #[error("signals not aligned to test series: {0}")]
    Misaligned(String),
    #[error("hold_days must be at least 1")]
    InvalidHoldDays,
    #[error("ledger has an open position; close it before reporting")]
    OpenPosition,
}

/// Counts and sums a closed ledger. A zero-pnl trade is not profitable.
pub fn compute_report(ledger: &Ledger) -> Result<BacktestReport, BacktestError> {
    if ledger.position().is_some() {
        return Err(BacktestError::OpenPosition);
    }
    let total = ledger.trades().len() as u32;
    let profitable = ledger
        .trades()
        .iter()
        .filter(|t| t.pnl().is_positive())
        .count() as u32;
    let unprofitable = total - profitable;
    let forced = ledger.trades().iter().filter(|t| t.forced_exit).count() as u32;
    let profit: Dollars = ledger.trades().iter().map(Trade::pnl).sum();
    Ok(BacktestReport {
        profitable: Some(profitable),
        unprofitable: Some(unprofitable),
        total: Some(total),
        success_rate: (total > 0).then(|| profitable as f64 / total as f64),
        profit,
        forced_exits: Some(forced),
    })
}

/// Strategy 0: one share bought at the first close, sold at the last.
/// Profit is exactly `last - first`; counts are not applicable.
pub fn run_buy_and_hold(series: &PriceSeries) -> Result<BacktestReport, BacktestError> {
    if series.len() < 2 {
        return Err(BacktestError::SeriesTooShort(series.len()));
    }
    let bars = series.bars();
    let profit = bars[bars.len() - 1].adj_close - bars[0].adj_close;
    Ok(BacktestReport {
        profitable: None,
        unprofitable: None,
        total: None,
        success_rate: None,
        profit,
        forced_exits: None,
    })
}

/// Strategy 1: when flat, buy at today's close if tomorrow's prediction
/// is above today's; when holding, sell at today's close when the
/// prediction stops rising (a predicted local peak). Any position left
/// at end of data is force-closed at the final close.
pub fn run_strategy1(
    test: &PriceSeries,
    predictions: &PredictionSeries,
) -> Result<(Ledger, BacktestReport), BacktestError> {
    if predictions.len() != test.len() {
        return Err(BacktestError::Misaligned(format!(
            "{} predictions for {} test bars",
            predictions.len(),
            test.len()
        )));
    }
    for (d, bar) in predictions.dates.iter().zip(test.bars()) {
        if *d != bar.date {
            return Err(BacktestError::Misaligned(format!(
                "prediction date {d} does not match test date {}",
                bar.date
            )));
        }
    }
    let bars = test.bars();
    let pred = &predictions.predicted;
    let mut ledger = Ledger::new();
    for t in 0..bars.len().saturating_sub(1) {
        let rising = pred[t + 1] > pred[t];
        if ledger.position().is_none() {
            if rising {
                ledger
                    .buy(bars[t].date, bars[t].adj_close)
                    .expect("flat before buy");
            }
        } else if !rising {
            ledger
                .sell(bars[t].date, bars[t].adj_close, false)
                .expect("holding before sell");
        }
    }
    if ledger.position().is_some() {
        let last = bars[bars.len() - 1];
        ledger
            .sell(last.date, last.adj_close, true)
            .expect("forced exit");
    }
    let report = compute_report(&ledger)?;
    Ok((ledger, report))
}

/// Strategy 2: a breakout label while flat buys at that day's close and
/// schedules an exit `hold_days` trading days later. Signals during a
/// hold are skipped, and no new position opens on the exit day itself or
/// on the final bar. Exits scheduled past end of data are force-closed
/// at the final close.
pub fn run_strategy2(
    test: &PriceSeries,
    labels: &[AnomalyLabel],
    hold_days: usize,
) -> Result<(Ledger, BacktestReport), BacktestError> {
    if hold_days == 0 {
        return Err(BacktestError::InvalidHoldDays);
    }
    if labels.len() != test.len() {
        return Err(BacktestError::Misaligned(format!(
            "{} labels for {} test bars",
            labels.len(),
            test.len()
        )));
    }
    for (l, bar) in labels.iter().zip(test.bars()) {
        if l.date != bar.date {
            return Err(BacktestError::Misaligned(format!(
                "label date {} does not match test date {}",
                l.date, bar.date
            )));
        }
    }
    let bars = test.bars();
    let n = bars.len();
    let mut ledger = Ledger::new();
    let mut scheduled_exit: Option<usize> = None;
    for t in 0..n {
        let mut sold_today = false;
        if let Some(exit) = scheduled_exit {
            if exit == t {
                ledger
                    .sell(bars[t].date, bars[t].adj_close, false)
                    .expect("scheduled exit");
                scheduled_exit = None;
                sold_today = true;
            } else if t == n - 1 {
                // End of data before the scheduled exit.
                ledger
                    .sell(bars[t].date, bars[t].adj_close, true)
                    .expect("forced exit");
                scheduled_exit = None;
                sold_today = true;
            }
        }
        // One share only: re-entry waits for the day after an exit, and a
        // signal on the final bar has no later close to exit at.
        if ledger.position().is_none() && !sold_today && t + 1 < n && labels[t].is_anomaly {
            ledger
                .buy(bars[t].date, bars[t].adj_close)
                .expect("flat before buy");
            scheduled_exit = Some(t + hold_days);
        }
    }
    let report = compute_report(&ledger)?;
    Ok((ledger, report))
}
