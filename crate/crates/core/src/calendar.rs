//! Calendar helpers: the simulated reference year and minute-of-week
//! timestamps used by the weekly mobility schedule.

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const MINUTES_PER_DAY: u32 = 1_440;
pub const MINUTES_PER_WEEK: u32 = 10_080;
pub const HOURS_PER_WEEK: u32 = 168;
pub const HOURS_PER_YEAR: usize = 8_760;

/// Minute within the simulated week; 0 is Monday 00:00.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeekMinute(u32);

impl WeekMinute {
    pub fn new(minutes: u32) -> Option<Self> {
        (minutes < MINUTES_PER_WEEK).then_some(Self(minutes))
    }

    /// Build from weekday (0 = Monday .. 6 = Sunday) and time of day.
    pub fn from_day_time(day: u32, hour: u32, minute: u32) -> Option<Self> {
        if day > 6 || hour > 23 || minute > 59 {
            return None;
        }
        Some(Self(day * MINUTES_PER_DAY + hour * 60 + minute))
    }

    pub fn minutes(self) -> u32 {
        self.0
    }

    /// Weekday index, 0 = Monday.
    pub fn day(self) -> u32 {
        self.0 / MINUTES_PER_DAY
    }

    pub fn hour_of_week(self) -> u32 {
        self.0 / 60
    }

    pub fn hour_of_day(self) -> u32 {
        (self.0 / 60) % 24
    }

    pub fn minute_of_hour(self) -> u32 {
        self.0 % 60
    }
}

/// The simulated non-leap reference year.
///
/// Weekday alignment of January 1 drives how the weekly trip schedule is
/// tiled over the 8760 hourly steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimYear {
    year: i32,
}

impl SimYear {
    pub fn new(year: i32) -> Result<Self> {
        let jan1 = NaiveDate::from_ymd_opt(year, 1, 1)
            .ok_or_else(|| CoreError::Config(format!("invalid year {year}")))?;
        if jan1.leap_year() {
            return Err(CoreError::Config(format!(
                "{year} is a leap year; the simulation uses a non-leap reference year"
            )));
        }
        Ok(Self { year })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn start(self) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(self.year, 1, 1)
            .expect("validated at construction")
            .and_hms_opt(0, 0, 0)
            .expect("midnight")
    }

    pub fn hours(self) -> usize {
        HOURS_PER_YEAR
    }

    /// Days from Monday for January 1 (0 = Monday .. 6 = Sunday).
    pub fn jan1_weekday_offset(self) -> u32 {
        NaiveDate::from_ymd_opt(self.year, 1, 1)
            .expect("validated at construction")
            .weekday()
            .num_days_from_monday()
    }

    /// Map an hour of the year onto the hour of the week (0..168).
    pub fn hour_of_week(self, hour_of_year: usize) -> u32 {
        ((self.jan1_weekday_offset() * 24) as usize + hour_of_year) as u32 % HOURS_PER_WEEK
    }
}

/// Hour-aligned timestamps are required throughout (the step is fixed at
/// one hour).
pub fn is_hour_aligned(ts: NaiveDateTime) -> bool {
    ts.minute() == 0 && ts.second() == 0 && ts.nanosecond() == 0
}
