use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::odr::Skew;
use crate::data::caps::MAX_SENSORS;
use crate::data::{SampleRecord, SamplePayload, SensorConfig, SensorKind};
use crate::sim::SimTime;

/// Label sequence replayed by classifier channels unless a fixture overrides it.
pub const DEFAULT_MLC_SCRIPT: [u8; 10] = [0, 0, 0, 1, 1, 2, 2, 2, 1, 0];

const MAX_SCRIPT: usize = 32;
const WALK_STEP: i16 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SensorError {
    #[error("sensor {0} is disabled or not armed")]
    SensorDisabled(usize),
    #[error("sensor {0} has no data ready")]
    NoDataReady(usize),
    #[error("no sensor with id {0}")]
    UnknownSensor(usize),
}

/// Per-sensor simulation parameters that are not part of the device model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorParams {
    pub skew: Skew,
    pub seed: u64,
    pub script: heapless::Vec<u8, MAX_SCRIPT>,
}

impl SensorParams {
    pub fn new(skew: Skew, seed: u64) -> Self {
        SensorParams {
            skew,
            seed,
            script: heapless::Vec::from_slice(&DEFAULT_MLC_SCRIPT).expect("fits"),
        }
    }
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams::new(Skew::DEFAULT, 0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SensorStats {
    pub drdy_edges: u64,
    pub reads: u64,
    /// Edges that arrived while the previous sample was still unread.
    pub overruns: u64,
}

#[derive(Debug, Clone)]
pub struct VirtualSensor {
    id: usize,
    kind: SensorKind,
    config: SensorConfig,
    params: SensorParams,
    rng: ChaCha8Rng,
    axes: [i16; 3],
    epoch: Option<SimTime>,
    edge: u64,
    generation: u32,
    drdy_pending: bool,
    latched: SampleRecord,
    stats: SensorStats,
}

impl VirtualSensor {
    pub fn new(id: usize, kind: SensorKind, config: SensorConfig, params: SensorParams) -> Self {
        VirtualSensor {
            id,
            kind,
            config,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            axes: [0; 3],
            epoch: None,
            edge: 0,
            generation: 0,
            drdy_pending: false,
            latched: SampleRecord { timestamp_us: 0, payload: SamplePayload::Classifier { class_id: 0 } },
            stats: SensorStats::default(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn kind(&self) -> SensorKind {
        self.kind
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: SensorConfig) {
        self.config = config;
    }

    pub fn params(&self) -> &SensorParams {
        &self.params
    }

    pub fn skew(&self) -> Skew {
        self.params.skew
    }

    /// Incremented on every arm and disarm; edges scheduled under an older
    /// generation are stale.
    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn is_armed(&self) -> bool {
        self.epoch.is_some()
    }

    pub fn drdy_pending(&self) -> bool {
        self.drdy_pending
    }

    pub fn stats(&self) -> SensorStats {
        self.stats
    }

    /// Skewed period at the current ODR.
    pub fn period_ns(&self) -> u64 {
        self.params.skew.period_ns(self.config.odr)
    }

    /// Starts the data-ready clock at `now`, restarting the waveform from its
    /// seed. Returns the time of the first edge.
    pub fn arm(&mut self, now: SimTime) -> Result<SimTime, SensorError> {
        if !self.config.enabled {
            return Err(SensorError::SensorDisabled(self.id));
        }
        self.generation = self.generation.wrapping_add(1);
        self.epoch = Some(now);
        self.edge = 0;
        self.drdy_pending = false;
        self.rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        self.axes = [0; 3];
        Ok(now + self.params.skew.edge_offset_ns(self.config.odr, 1))
    }

    pub fn disarm(&mut self) {
        if self.epoch.take().is_some() {
            self.generation = self.generation.wrapping_add(1);
        }
        self.drdy_pending = false;
    }

    /// Handles a data-ready edge at `now`: latches a new sample, raises
    /// `drdy_pending` and returns when the next edge falls.
    pub fn tick_drdy(&mut self, now: SimTime) -> Result<SimTime, SensorError> {
        let Some(epoch) = self.epoch.filter(|_| self.config.enabled) else {
            return Err(SensorError::SensorDisabled(self.id));
        };
        self.edge += 1;
        self.stats.drdy_edges += 1;
        if self.drdy_pending {
            self.stats.overruns += 1;
        }
        self.drdy_pending = true;
        let payload = if self.kind.is_inertial() {
            for a in &mut self.axes {
                *a = a.saturating_add(self.rng.gen_range(-WALK_STEP..=WALK_STEP));
            }
            let [x, y, z] = self.axes;
            SamplePayload::Inertial { x, y, z }
        } else {
            let s = &self.params.script;
            let class_id = if s.is_empty() { 0 } else { s[((self.edge - 1) % s.len() as u64) as usize] };
            SamplePayload::Classifier { class_id }
        };
        self.latched = SampleRecord { timestamp_us: now.as_us(), payload };
        Ok(epoch + self.params.skew.edge_offset_ns(self.config.odr, self.edge + 1))
    }

    /// Reads the latched sample over the bus starting at `now`. The pending
    /// flag clears as the transfer starts; the data is valid at completion.
    pub fn i2c_read_sample(
        &mut self,
        now: SimTime,
        i2c_read_ns: u64,
    ) -> Result<(SampleRecord, SimTime), SensorError> {
        if !self.drdy_pending {
            return Err(SensorError::NoDataReady(self.id));
        }
        self.drdy_pending = false;
        self.stats.reads += 1;
        Ok((self.latched, now + i2c_read_ns))
    }
}

/// Bit set of sensor ids.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SensorSet(u8);

const _: () = assert!(MAX_SENSORS <= 8);

impl SensorSet {
    pub const EMPTY: SensorSet = SensorSet(0);

    pub fn single(id: usize) -> Self {
        let mut s = SensorSet::EMPTY;
        s.insert(id);
        s
    }

    pub fn insert(&mut self, id: usize) {
        self.0 |= 1 << id;
    }

    pub fn remove(&mut self, id: usize) {
        self.0 &= !(1 << id);
    }

    pub fn contains(&self, id: usize) -> bool {
        id < 8 && self.0 & (1 << id) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..8).filter(move |i| bits & (1 << i) != 0)
    }
}

impl FromIterator<usize> for SensorSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = SensorSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

/// Maps a shared interrupt line to the sensors that raised it.
///
/// The mapping comes from the saved configuration, so it is free. With
/// `via_status_read` the firmware instead reads a status register first,
/// which costs one extra bus transaction of `i2c_read_ns`.
pub fn resolve_drdy_source(flags: SensorSet, via_status_read: bool, i2c_read_ns: u64) -> (SensorSet, u64) {
    let cost = if via_status_read && !flags.is_empty() { i2c_read_ns } else { 0 };
    (flags, cost)
}
