use core::fmt;

use serde::{Deserialize, Serialize};

/// Output data rates a virtual sensor can be clocked at, in Hz.
pub const ODR_LADDER: [u16; 10] = [15, 30, 60, 120, 240, 480, 960, 1920, 3840, 7680];

/// A rate from [`ODR_LADDER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct OdrHz(u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{0} Hz is not on the ODR ladder")]
pub struct NotOnLadder(pub u32);

impl OdrHz {
    pub const MIN: OdrHz = OdrHz(15);
    pub const MAX: OdrHz = OdrHz(7680);

    pub fn new(hz: u32) -> Option<OdrHz> {
        ODR_LADDER.iter().find(|&&r| r as u32 == hz).map(|&r| OdrHz(r))
    }

    pub fn hz(self) -> u32 {
        self.0 as u32
    }

    /// Position on the ladder, 0 for 15 Hz.
    pub fn index(self) -> usize {
        ODR_LADDER.iter().position(|&r| r == self.0).unwrap_or(0)
    }

    pub fn ladder() -> impl DoubleEndedIterator<Item = OdrHz> + ExactSizeIterator {
        ODR_LADDER.iter().map(|&r| OdrHz(r))
    }

    /// Nominal period without skew.
    pub fn nominal_period_ns(self) -> u64 {
        1_000_000_000 / self.0 as u64
    }
}

impl TryFrom<u32> for OdrHz {
    type Error = NotOnLadder;

    fn try_from(hz: u32) -> Result<Self, NotOnLadder> {
        OdrHz::new(hz).ok_or(NotOnLadder(hz))
    }
}

impl From<OdrHz> for u32 {
    fn from(odr: OdrHz) -> u32 {
        odr.hz()
    }
}

impl fmt::Display for OdrHz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Hz", self.0)
    }
}

/// Ratio of achieved to nominal interrupt rate, `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skew {
    pub num: u32,
    pub den: u32,
}

impl Skew {
    pub const UNITY: Skew = Skew { num: 1, den: 1 };
    /// Drift that stretches the 7680 Hz period to exactly 133.75 µs
    /// (an achieved rate of about 7476.6 Hz).
    pub const DEFAULT: Skew = Skew { num: 625, den: 642 };

    pub fn new(num: u32, den: u32) -> Option<Skew> {
        (num > 0 && den > 0).then_some(Skew { num, den })
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Time of the `k`-th data-ready edge after the sensor was armed,
    /// `floor(k / (odr * skew))` in nanoseconds.
    pub fn edge_offset_ns(self, odr: OdrHz, k: u64) -> u64 {
        let n = k as u128 * 1_000_000_000u128 * self.den as u128;
        let d = odr.hz() as u128 * self.num as u128;
        (n / d) as u64
    }

    /// Skewed period, truncated to whole nanoseconds.
    pub fn period_ns(self, odr: OdrHz) -> u64 {
        self.edge_offset_ns(odr, 1)
    }

    /// Number of edges at offsets in `(0, window_ns]`.
    pub fn edges_within(self, odr: OdrHz, window_ns: u64) -> u64 {
        // Largest k with floor(k * d / n) <= window.
        let n = odr.hz() as u128 * self.num as u128;
        let d = 1_000_000_000u128 * self.den as u128;
        (((window_ns as u128 + 1) * n - 1) / d) as u64
    }
}

impl Default for Skew {
    fn default() -> Self {
        Skew::DEFAULT
    }
}
