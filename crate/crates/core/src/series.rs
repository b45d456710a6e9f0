//! Hourly power time series, the universal currency of the simulator.
//!
//! Values are kW at a fixed one-hour step, so the energy per step in kWh
//! equals the kW sample and annual sums read directly as kWh.

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::calendar::is_hour_aligned;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Elementwise combination of two aligned series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    /// `max(a - b, 0)` per sample; never yields negatives.
    SubClampedAtZero,
    Min,
}

/// Hourly series of finite power samples anchored to a calendar start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<S> {
    start: NaiveDateTime,
    values: Vec<S>,
}

impl<S: Scalar> TimeSeries<S> {
    /// Build a series, checking that every sample is finite and the start
    /// is hour-aligned.
    pub fn new(start: NaiveDateTime, values: Vec<S>) -> Result<Self> {
        if !is_hour_aligned(start) {
            return Err(CoreError::Alignment(format!(
                "series start {start} is not hour-aligned"
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(format!(
                "sample {idx} of series starting {start}"
            )));
        }
        Ok(Self { start, values })
    }

    /// Build a demand/generation series, additionally requiring samples ≥ 0.
    pub fn new_non_negative(start: NaiveDateTime, values: Vec<S>) -> Result<Self> {
        let series = Self::new(start, values)?;
        if let Some(idx) = series.values.iter().position(|v| *v < S::zero()) {
            return Err(CoreError::Negative(format!(
                "sample {idx} of series starting {start}"
            )));
        }
        Ok(series)
    }

    pub fn zeros(start: NaiveDateTime, len: usize) -> Self {
        Self {
            start,
            values: vec![S::zero(); len],
        }
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    /// Sum of all samples; at the one-hour step this is the energy in kWh.
    pub fn total(&self) -> S {
        self.values.iter().copied().sum()
    }

    pub fn max(&self) -> S {
        self.values
            .iter()
            .copied()
            .fold(S::zero(), |acc, v| acc.max(v))
    }

    pub fn scaled(&self, factor: S) -> Self {
        Self {
            start: self.start,
            values: self.values.iter().map(|v| *v * factor).collect(),
        }
    }

    fn check_aligned(&self, other: &Self) -> Result<()> {
        if self.start != other.start || self.values.len() != other.values.len() {
            return Err(CoreError::Alignment(format!(
                "lhs starts {} with {} samples, rhs starts {} with {} samples",
                self.start,
                self.values.len(),
                other.start,
                other.values.len()
            )));
        }
        Ok(())
    }

    /// Elementwise binary operation on two aligned series.
    pub fn binary(&self, other: &Self, op: BinaryOp) -> Result<Self> {
        self.check_aligned(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| match op {
                BinaryOp::Add => a + b,
                BinaryOp::SubClampedAtZero => (a - b).max(S::zero()),
                BinaryOp::Min => a.min(b),
            })
            .collect();
        Ok(Self {
            start: self.start,
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(other, BinaryOp::Add)
    }

    pub fn sub_clamped(&self, other: &Self) -> Result<Self> {
        self.binary(other, BinaryOp::SubClampedAtZero)
    }

    pub fn minimum(&self, other: &Self) -> Result<Self> {
        self.binary(other, BinaryOp::Min)
    }

    /// Accumulate another aligned series in place.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_aligned(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += *b;
        }
        Ok(())
    }

    /// Maximum sample per calendar month.
    ///
    /// The series must span exactly one calendar year starting January 1
    /// at 00:00; anything else is a coverage error.
    pub fn monthly_max(&self) -> Result<[S; 12]> {
        let date = self.start.date();
        if self.start.time() != chrono::NaiveTime::MIN || date.month() != 1 || date.day() != 1 {
            return Err(CoreError::Coverage(format!(
                "monthly maxima need a series starting January 1 00:00, got {}",
                self.start
            )));
        }
        let year = date.year();
        let year_hours: usize = (0..12)
            .map(|m| 24 * days_in_month(year, m + 1))
            .sum();
        if self.values.len() != year_hours {
            return Err(CoreError::Coverage(format!(
                "monthly maxima need exactly one calendar year ({year_hours} samples), got {}",
                self.values.len()
            )));
        }
        let mut result = [S::zero(); 12];
        let mut offset = 0;
        for (m, slot) in result.iter_mut().enumerate() {
            let hours = 24 * days_in_month(year, m as u32 + 1);
            let slice = &self.values[offset..offset + hours];
            *slot = slice
                .iter()
                .copied()
                .fold(S::neg_infinity(), |acc, v| acc.max(v));
            offset += hours;
        }
        Ok(result)
    }
}

fn days_in_month(year: i32, month: u32) -> usize {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid month");
    (next - first).num_days() as usize
}
