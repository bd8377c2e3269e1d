//! Compressed virtual clock.
//!
//! Real elapsed milliseconds map onto a virtual time of day at a fixed
//! integer compression factor. Game logic works in whole virtual minutes;
//! the sub-minute remainder stays available through [`VirtualClock::elapsed_real_ms`]
//! for smooth client rendering and duration measurement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const MS_PER_MINUTE: u64 = 60_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("real time must be non-negative, got {0} ms")]
    NegativeRealTime(i64),
    #[error("virtual time {vtime} outside day span {start}..={end}")]
    OutsideDay { vtime: VTime, start: VTime, end: VTime },
    #[error("day end {end} must be after day start {start}")]
    EmptyDay { start: VTime, end: VTime },
    #[error("compression factor must be positive")]
    ZeroFactor,
    #[error("cannot parse time of day {0:?} (expected HH:MM)")]
    Parse(String),
}

/// Virtual time of day in whole minutes from midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VTime(pub u32);

impl VTime {
    pub const fn hm(hour: u32, minute: u32) -> Self {
        VTime(hour * 60 + minute)
    }

    pub const fn minutes(self) -> u32 {
        self.0
    }

    pub fn plus(self, minutes: u32) -> Self {
        VTime(self.0 + minutes)
    }

    /// Saturating subtraction in minutes.
    pub fn minus(self, minutes: u32) -> Self {
        VTime(self.0.saturating_sub(minutes))
    }
}

impl fmt::Display for VTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for VTime {
    type Err = ClockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ClockError::Parse(s.to_string());
        let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
        let h: u32 = h.parse().map_err(|_| bad())?;
        let m: u32 = m.parse().map_err(|_| bad())?;
        if h > 24 || m > 59 {
            return Err(bad());
        }
        Ok(VTime::hm(h, m))
    }
}

impl Serialize for VTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.0)
    }
}

// Content files may spell times as "HH:MM"; the wire format uses integers.
impl<'de> Deserialize<'de> for VTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Minutes(u32),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Minutes(m) => Ok(VTime(m)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Something the clock reports while advancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockEvent {
    /// A virtual minute boundary was crossed; carries the new minute.
    Tick(VTime),
    /// The day end was reached. Emitted exactly once.
    DayEnd,
}

/// Clock parameters that come from the plan file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub compression_factor: u32,
    pub day_start: VTime,
    pub day_end: VTime,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            compression_factor: 20,
            day_start: VTime::hm(6, 30),
            day_end: VTime::hm(22, 30),
        }
    }
}

impl ClockConfig {
    pub fn validate(&self) -> Result<(), ClockError> {
        if self.compression_factor == 0 {
            return Err(ClockError::ZeroFactor);
        }
        if self.day_end <= self.day_start {
            return Err(ClockError::EmptyDay { start: self.day_start, end: self.day_end });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualClock {
    config: ClockConfig,
    elapsed_real_ms: u64,
    paused: bool,
    ended: bool,
}

impl Default for VirtualClock {
    fn default() -> Self {
        VirtualClock::new(ClockConfig::default()).expect("default config is valid")
    }
}

impl VirtualClock {
    pub fn new(config: ClockConfig) -> Result<Self, ClockError> {
        config.validate()?;
        Ok(VirtualClock { config, elapsed_real_ms: 0, paused: false, ended: false })
    }

    pub fn config(&self) -> &ClockConfig {
        &self.config
    }

    pub fn day_start(&self) -> VTime {
        self.config.day_start
    }

    pub fn day_end(&self) -> VTime {
        self.config.day_end
    }

    pub fn elapsed_real_ms(&self) -> u64 {
        self.elapsed_real_ms
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn pause(&mut self) {
        self.paused = true;
    }

    pub fn resume(&mut self) {
        self.paused = false;
    }

    /// Real milliseconds for the whole day span.
    pub fn day_length_ms(&self) -> u64 {
        self.to_real(self.config.day_end).expect("day end lies in span")
    }

    /// Maps a real elapsed time onto the virtual time of day, clamped at day end.
    pub fn to_virtual(&self, real_ms: i64) -> Result<VTime, ClockError> {
        if real_ms < 0 {
            return Err(ClockError::NegativeRealTime(real_ms));
        }
        Ok(self.virtual_at(real_ms as u64))
    }

    fn virtual_at(&self, real_ms: u64) -> VTime {
        let span = u64::from(self.config.day_end.0 - self.config.day_start.0);
        let minutes = (real_ms as u128 * self.config.compression_factor as u128
            / MS_PER_MINUTE as u128) as u64;
        VTime(self.config.day_start.0 + minutes.min(span) as u32)
    }

    /// Earliest real time at which the clock shows `vtime`.
    pub fn to_real(&self, vtime: VTime) -> Result<u64, ClockError> {
        let ClockConfig { day_start, day_end, compression_factor } = self.config;
        if vtime < day_start || vtime > day_end {
            return Err(ClockError::OutsideDay { vtime, start: day_start, end: day_end });
        }
        let minutes = u64::from(vtime.0 - day_start.0);
        Ok((minutes * MS_PER_MINUTE).div_ceil(u64::from(compression_factor)))
    }

    /// Current virtual time in whole minutes.
    pub fn now(&self) -> VTime {
        self.virtual_at(self.elapsed_real_ms)
    }

    /// Current virtual time in seconds since midnight, sub-minute precision kept.
    pub fn now_virtual_seconds(&self) -> u64 {
        u64::from(self.config.day_start.0) * 60 + self.virtual_seconds_between(0, self.elapsed_real_ms)
    }

    /// Virtual seconds elapsed between two real instants (floored).
    pub fn virtual_seconds_between(&self, from_ms: u64, to_ms: u64) -> u64 {
        to_ms.saturating_sub(from_ms) * u64::from(self.config.compression_factor) / 1000
    }

    /// Advances real time and reports every virtual minute crossed, then a
    /// single `DayEnd` once the end of the day is reached. A paused or ended
    /// clock does not move.
    pub fn advance(&mut self, delta_real_ms: u64) -> Vec<ClockEvent> {
        if self.paused || self.ended || delta_real_ms == 0 {
            return Vec::new();
        }
        let before = self.now();
        let limit = self.day_length_ms();
        self.elapsed_real_ms = self.elapsed_real_ms.saturating_add(delta_real_ms).min(limit);
        let after = self.now();
        let mut events: Vec<ClockEvent> =
            (before.0 + 1..=after.0).map(|m| ClockEvent::Tick(VTime(m))).collect();
        if self.elapsed_real_ms >= limit {
            self.ended = true;
            events.push(ClockEvent::DayEnd);
        }
        events
    }

    /// Advances until the clock shows `target` (no-op if already there or past).
    pub fn advance_to(&mut self, target: VTime) -> Vec<ClockEvent> {
        let target = target.min(self.config.day_end).max(self.config.day_start);
        let target_ms = self.to_real(target).expect("clamped into span");
        self.advance(target_ms.saturating_sub(self.elapsed_real_ms))
    }
}
