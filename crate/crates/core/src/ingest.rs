//! Price panels, trading calendars and intraday arithmetic returns.
//!
//! Input CSV is long format with header `timestamp,symbol,price`, one row per
//! `(timestamp, symbol)`, rows ordered by timestamp. Timestamps are ISO-8601
//! with seconds (`2008-10-15T10:30:00`; a space separator or trailing `Z` is
//! also accepted).

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};

use crate::{Error, Result, Scalar};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Regular trading session (same open/close every trading day), weekdays
/// only, minus listed holidays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    open: NaiveTime,
    close: NaiveTime,
    holidays: BTreeSet<NaiveDate>,
}

impl Default for TradingCalendar {
    /// 09:30-16:00 weekday sessions, no holidays.
    fn default() -> Self {
        Self {
            open: NaiveTime::from_hms_opt(9, 30, 0).expect("valid time"),
            close: NaiveTime::from_hms_opt(16, 0, 0).expect("valid time"),
            holidays: BTreeSet::new(),
        }
    }
}

impl TradingCalendar {
    pub fn new(open: NaiveTime, close: NaiveTime, holidays: BTreeSet<NaiveDate>) -> Result<Self> {
        if close <= open {
            return Err(Error::Calendar {
                line: 0,
                message: format!("close {close} not after open {open}"),
            });
        }
        Ok(Self {
            open,
            close,
            holidays,
        })
    }

    /// Parses `open=HH:MM`, `close=HH:MM` and one `YYYY-MM-DD` holiday per
    /// line. Blank lines and `#` comments are ignored; missing keys keep the
    /// 09:30/16:00 defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut calendar = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Calendar {
                line: idx + 1,
                message,
            };
            if let Some((key, value)) = line.split_once('=') {
                let time = NaiveTime::parse_from_str(value.trim(), "%H:%M")
                    .map_err(|e| err(format!("bad time {value:?}: {e}")))?;
                match key.trim() {
                    "open" => calendar.open = time,
                    "close" => calendar.close = time,
                    other => return Err(err(format!("unknown key {other:?}"))),
                }
            } else {
                let date = NaiveDate::parse_from_str(line, "%Y-%m-%d")
                    .map_err(|e| err(format!("bad holiday date {line:?}: {e}")))?;
                calendar.holidays.insert(date);
            }
        }
        Self::new(calendar.open, calendar.close, calendar.holidays)
    }

    pub fn open(&self) -> NaiveTime {
        self.open
    }

    pub fn close(&self) -> NaiveTime {
        self.close
    }

    pub fn holidays(&self) -> &BTreeSet<NaiveDate> {
        &self.holidays
    }

    pub fn session_minutes(&self) -> u32 {
        ((self.close - self.open).num_minutes()) as u32
    }

    pub fn is_trading_day(&self, date: NaiveDate) -> bool {
        !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) && !self.holidays.contains(&date)
    }

    /// True for instants inside a session, open and close inclusive.
    pub fn contains(&self, ts: NaiveDateTime) -> bool {
        self.is_trading_day(ts.date()) && ts.time() >= self.open && ts.time() <= self.close
    }

    /// First trading day on or after `date`.
    pub fn next_trading_day(&self, mut date: NaiveDate) -> NaiveDate {
        while !self.is_trading_day(date) {
            date = date.succ_opt().expect("date in range");
        }
        date
    }

    /// `count` consecutive trading days starting on or after `start`.
    pub fn trading_days(&self, start: NaiveDate, count: usize) -> Vec<NaiveDate> {
        let mut days = Vec::with_capacity(count);
        let mut date = start;
        while days.len() < count {
            date = self.next_trading_day(date);
            days.push(date);
            date = date.succ_opt().expect("date in range");
        }
        days
    }

    /// Trading days in `[start, end]`.
    pub fn trading_days_between(&self, start: NaiveDate, end: NaiveDate) -> usize {
        start
            .iter_days()
            .take_while(|d| *d <= end)
            .filter(|d| self.is_trading_day(*d))
            .count()
    }

    /// Number of whole `interval`-minute returns per session.
    pub fn intervals_per_session(&self, interval_minutes: u32) -> Result<u32> {
        let session = self.session_minutes();
        if interval_minutes == 0 || interval_minutes > session {
            return Err(Error::InvalidInterval {
                interval: interval_minutes,
                session,
            });
        }
        Ok(session / interval_minutes)
    }

    /// Start of the `k`-th return interval on `date`.
    pub fn grid_point(&self, date: NaiveDate, interval_minutes: u32, k: u32) -> NaiveDateTime {
        date.and_time(self.open) + Duration::minutes(i64::from(interval_minutes) * i64::from(k))
    }
}

/// Aligned price observations of `K` assets; `None` marks a missing tick.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel<T> {
    asset_ids: Vec<String>,
    timestamps: Vec<NaiveDateTime>,
    prices: Vec<Vec<Option<T>>>,
    calendar: TradingCalendar,
}

impl<T: Scalar> PricePanel<T> {
    /// `prices[k][t]` is asset `k` at `timestamps[t]`.
    pub fn new(
        asset_ids: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        prices: Vec<Vec<Option<T>>>,
        calendar: TradingCalendar,
    ) -> Result<Self> {
        if prices.len() != asset_ids.len() {
            return Err(Error::InvalidPanel(format!(
                "{} price rows for {} assets",
                prices.len(),
                asset_ids.len()
            )));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPanel(format!(
                "timestamps not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(ts) = timestamps.iter().find(|ts| !calendar.contains(**ts)) {
            return Err(Error::InvalidPanel(format!("{ts} outside trading sessions")));
        }
        for (id, row) in asset_ids.iter().zip(&prices) {
            if row.len() != timestamps.len() {
                return Err(Error::InvalidPanel(format!(
                    "asset {id} has {} prices for {} timestamps",
                    row.len(),
                    timestamps.len()
                )));
            }
            if row.iter().flatten().any(|p| !(p.is_finite() && *p > T::zero())) {
                return Err(Error::InvalidPanel(format!(
                    "asset {id} has a non-positive or non-finite price"
                )));
            }
        }
        Ok(Self {
            asset_ids,
            timestamps,
            prices,
            calendar,
        })
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn prices(&self, asset: usize) -> &[Option<T>] {
        &self.prices[asset]
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Row accounting from [`load_prices`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub rows_read: usize,
    /// Rows dropped because they fall outside the trading sessions.
    pub rows_excluded: usize,
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let s = raw.trim();
    let s = s.strip_suffix('Z').unwrap_or(s);
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Parses a long-format price CSV and keeps the rows inside `calendar`'s sessions.
pub fn load_prices<T: Scalar, R: Read>(
    source: R,
    calendar: &TradingCalendar,
) -> Result<(PricePanel<T>, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["timestamp", "symbol", "price"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header timestamp,symbol,price, got {:?}", header.as_slice()),
        });
    }

    let mut report = LoadReport::default();
    let mut timestamps: Vec<NaiveDateTime> = Vec::new();
    let mut symbols: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut cells: Vec<(usize, usize, T)> = Vec::new();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    let mut last: Option<NaiveDateTime> = None;

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse { line, message };
        if record.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, got {}", record.len())));
        }
        report.rows_read += 1;
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| parse_err(format!("bad timestamp {:?}", &record[0])))?;
        let symbol = record[1].to_string();
        if symbol.is_empty() {
            return Err(parse_err("empty symbol".into()));
        }
        let price = T::parse_decimal(&record[2])
            .ok_or_else(|| parse_err(format!("bad price {:?}", &record[2])))?;
        if !(price.is_finite() && price > T::zero()) {
            return Err(parse_err(format!("non-positive price {:?}", &record[2])));
        }
        if let Some(prev) = last {
            if ts < prev {
                return Err(parse_err(format!("timestamp {ts} before preceding {prev}")));
            }
        }
        last = Some(ts);
        if !calendar.contains(ts) {
            report.rows_excluded += 1;
            continue;
        }
        if timestamps.last() != Some(&ts) {
            timestamps.push(ts);
        }
        let asset = *symbols.entry(symbol.clone()).or_insert_with(|| {
            names.push(symbol.clone());
            names.len() - 1
        });
        let t = timestamps.len() - 1;
        if let Some(first) = seen.insert((asset, t), line) {
            return Err(parse_err(format!(
                "duplicate price for {symbol} at {ts} (first on line {first})"
            )));
        }
        cells.push((asset, t, price));
    }

    // Assets in lexicographic order, independent of row order.
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let mut position = vec![0; names.len()];
    for (pos, &asset) in order.iter().enumerate() {
        position[asset] = pos;
    }
    let mut prices = vec![vec![None; timestamps.len()]; names.len()];
    for (asset, t, price) in cells {
        prices[position[asset]][t] = Some(price);
    }
    let asset_ids = order.iter().map(|&a| names[a].clone()).collect();
    let panel = PricePanel::new(asset_ids, timestamps, prices, calendar.clone())?;
    Ok((panel, report))
}

/// Writes a panel in the long CSV format read by [`load_prices`]; gaps are skipped.
pub fn write_prices<T: Scalar, W: Write>(panel: &PricePanel<T>, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["timestamp", "symbol", "price"])?;
    for (t, ts) in panel.timestamps.iter().enumerate() {
        let stamp = format_timestamp(*ts);
        for (id, row) in panel.asset_ids.iter().zip(&panel.prices) {
            if let Some(p) = row[t] {
                writer.write_record([stamp.as_str(), id.as_str(), &p.to_string()])?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Aligned arithmetic returns of `K` assets on shared interval-start stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix<T> {
    asset_ids: Vec<String>,
    interval_minutes: u32,
    returns: Vec<Vec<T>>,
    stamps: Vec<NaiveDateTime>,
}

impl<T: Scalar> ReturnMatrix<T> {
    /// `returns[k][t]` is the return of asset `k` over the interval starting at `stamps[t]`.
    pub fn new(
        asset_ids: Vec<String>,
        interval_minutes: u32,
        returns: Vec<Vec<T>>,
        stamps: Vec<NaiveDateTime>,
    ) -> Result<Self> {
        if returns.len() != asset_ids.len() {
            return Err(Error::InvalidPanel(format!(
                "{} return rows for {} assets",
                returns.len(),
                asset_ids.len()
            )));
        }
        if stamps.is_empty() {
            return Err(Error::NoReturns);
        }
        if let Some(row) = returns.iter().find(|row| row.len() != stamps.len()) {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: stamps.len(),
            });
        }
        if stamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPanel("return stamps not strictly increasing".into()));
        }
        if returns.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("returns"));
        }
        Ok(Self {
            asset_ids,
            interval_minutes,
            returns,
            stamps,
        })
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    pub fn assets(&self) -> usize {
        self.asset_ids.len()
    }

    /// Number of return observations `T` per asset.
    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn series(&self, asset: usize) -> &[T] {
        &self.returns[asset]
    }

    pub fn stamps(&self) -> &[NaiveDateTime] {
        &self.stamps
    }

    /// First and last trading dates covered.
    pub fn period(&self) -> (NaiveDate, NaiveDate) {
        (
            self.stamps[0].date(),
            self.stamps[self.stamps.len() - 1].date(),
        )
    }

    /// Distinct trading dates in order, each with the column range it owns.
    pub fn day_ranges(&self) -> Vec<(NaiveDate, std::ops::Range<usize>)> {
        let mut ranges: Vec<(NaiveDate, std::ops::Range<usize>)> = Vec::new();
        for (t, ts) in self.stamps.iter().enumerate() {
            match ranges.last_mut() {
                Some((date, range)) if *date == ts.date() => range.end = t + 1,
                _ => ranges.push((ts.date(), t..t + 1)),
            }
        }
        ranges
    }

    /// Sub-matrix over a contiguous column range.
    pub fn slice(&self, columns: std::ops::Range<usize>) -> Result<Self> {
        Self::new(
            self.asset_ids.clone(),
            self.interval_minutes,
            self.returns.iter().map(|r| r[columns.clone()].to_vec()).collect(),
            self.stamps[columns].to_vec(),
        )
    }
}

fn previous_tick<T: Scalar>(
    row: &[Option<T>],
    times: &[NaiveDateTime],
    day: std::ops::Range<usize>,
    at: NaiveDateTime,
) -> Option<T> {
    let end = day.start + times[day.clone()].partition_point(|ts| *ts <= at);
    row[day.start..end].iter().rev().find_map(|p| *p)
}

/// Intraday arithmetic returns `(P(t + dt) - P(t)) / P(t)` on the session grid
/// `open, open + dt, ...`.
///
/// Each session yields `floor(session / dt)` returns; a trailing partial
/// interval is ignored and nothing spans two sessions. Endpoint prices are the
/// last tick at or before the endpoint within the same session; an interval
/// without both endpoint prices for every asset is dropped panel-wide.
pub fn compute_returns<T: Scalar>(
    panel: &PricePanel<T>,
    interval_minutes: u32,
) -> Result<ReturnMatrix<T>> {
    let calendar = panel.calendar();
    let per_session = calendar.intervals_per_session(interval_minutes)?;
    if panel.is_empty() || panel.assets() == 0 {
        return Err(Error::NoReturns);
    }
    let times = panel.timestamps();

    let mut days: Vec<(NaiveDate, std::ops::Range<usize>)> = Vec::new();
    for (t, ts) in times.iter().enumerate() {
        match days.last_mut() {
            Some((date, range)) if *date == ts.date() => range.end = t + 1,
            _ => days.push((ts.date(), t..t + 1)),
        }
    }

    let k = panel.assets();
    let mut returns: Vec<Vec<T>> = vec![Vec::new(); k];
    let mut stamps = Vec::new();
    let mut endpoint = vec![None; k];
    let mut next = vec![None; k];
    for (date, range) in days {
        let price_at = |asset: usize, at: NaiveDateTime| {
            previous_tick(panel.prices(asset), times, range.clone(), at)
        };
        let start = calendar.grid_point(date, interval_minutes, 0);
        for (asset, slot) in endpoint.iter_mut().enumerate() {
            *slot = price_at(asset, start);
        }
        for step in 0..per_session {
            let from = calendar.grid_point(date, interval_minutes, step);
            let to = calendar.grid_point(date, interval_minutes, step + 1);
            for (asset, slot) in next.iter_mut().enumerate() {
                *slot = price_at(asset, to);
            }
            let complete = endpoint.iter().chain(&next).all(Option::is_some);
            if complete {
                for asset in 0..k {
                    let p0 = endpoint[asset].expect("complete");
                    let p1 = next[asset].expect("complete");
                    returns[asset].push((p1 - p0) / p0);
                }
                stamps.push(from);
            }
            std::mem::swap(&mut endpoint, &mut next);
        }
    }
    ReturnMatrix::new(panel.asset_ids().to_vec(), interval_minutes, returns, stamps)
}

/// The two aligned return series of assets `i` and `j`.
pub fn pair_view<T: Scalar>(matrix: &ReturnMatrix<T>, i: usize, j: usize) -> Result<(&[T], &[T])> {
    let len = matrix.assets();
    for index in [i, j] {
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
    }
    if i == j {
        return Err(Error::SameAsset(i));
    }
    Ok((matrix.series(i), matrix.series(j)))
}
