use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::data::{decode_sample, DataError, DeviceModel, SamplePayload, SampleRecord, SensorKind};
use crate::protocol::PacketType;
use crate::sim::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelRecording {
    pub channel: u8,
    pub sensor: String,
    pub kind: SensorKind,
    pub samples: Vec<(u16, SampleRecord)>,
    /// Sequence discontinuities seen on this channel.
    pub gaps: u64,
    expected: Option<u16>,
}

impl ChannelRecording {
    fn new(channel: u8, sensor: &str, kind: SensorKind) -> Self {
        ChannelRecording { channel, sensor: sensor.to_owned(), kind, samples: Vec::new(), gaps: 0, expected: None }
    }

    pub fn file_name(&self) -> String {
        format!("ch{:02}_{}.csv", self.channel, self.sensor)
    }

    /// CSV with a header row; inertial channels carry `x,y,z`, classifier
    /// channels `class_id`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.kind.is_inertial() {
            out.push_str("seq,timestamp_us,x,y,z\n");
        } else {
            out.push_str("seq,timestamp_us,class_id\n");
        }
        for (seq, r) in &self.samples {
            match r.payload {
                SamplePayload::Inertial { x, y, z } => {
                    let _ = writeln!(out, "{seq},{},{x},{y},{z}", r.timestamp_us);
                }
                SamplePayload::Classifier { class_id } => {
                    let _ = writeln!(out, "{seq},{},{class_id}", r.timestamp_us);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub sent_at: SimTime,
    pub replied_at: SimTime,
    pub command: String,
    pub reply_type: PacketType,
    pub reply: String,
}

/// One uplink frame as received (used for cross-run comparisons).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedFrame {
    pub packet_type: PacketType,
    pub channel: u8,
    pub payload: Vec<u8>,
}

/// Everything a controller saw during one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecording {
    pub channels: Vec<ChannelRecording>,
    pub transcript: Vec<TranscriptEntry>,
    /// Set once a `stop_log` command has been acknowledged.
    pub finalized: bool,
    pub protocol_errors: u64,
    pub frames: Option<Vec<ReceivedFrame>>,
}

impl SessionRecording {
    pub fn new(model: &DeviceModel) -> Self {
        let channels =
            model.sensors().iter().map(|s| ChannelRecording::new(s.channel, &s.name, s.kind)).collect();
        SessionRecording { channels, transcript: Vec::new(), finalized: false, protocol_errors: 0, frames: None }
    }

    pub fn channel(&self, channel: u8) -> Option<&ChannelRecording> {
        self.channels.iter().find(|c| c.channel == channel)
    }

    pub fn total_gaps(&self) -> u64 {
        self.channels.iter().map(|c| c.gaps).sum()
    }

    pub fn total_samples(&self) -> usize {
        self.channels.iter().map(|c| c.samples.len()).sum()
    }

    /// Expect every channel to restart at sequence 0.
    pub fn restart_sequences(&mut self) {
        for c in &mut self.channels {
            c.expected = Some(0);
        }
    }

    pub fn record_data(&mut self, channel: u8, seq: u16, body: &[u8]) -> Result<(), DataError> {
        let rec = decode_sample(body)?;
        let Some(ch) = self.channels.iter_mut().find(|c| c.channel == channel) else {
            self.protocol_errors += 1;
            return Ok(());
        };
        if ch.expected.is_some_and(|e| e != seq) {
            ch.gaps += 1;
        }
        ch.expected = Some(seq.wrapping_add(1));
        ch.samples.push((seq, rec));
        Ok(())
    }

    pub fn transcript_csv(&self) -> String {
        let mut out = String::from("sent_ns,replied_ns,command,reply_type,reply\n");
        for t in &self.transcript {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t.sent_at.as_ns(),
                t.replied_at.as_ns(),
                csv_quote(&t.command),
                if t.reply_type == PacketType::Error { "error" } else { "response" },
                csv_quote(&t.reply)
            );
        }
        out
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Writes one CSV per channel plus `transcript.csv` into `dir`, creating it
/// if needed. Returns the paths written, in a fixed order.
pub fn export_recording(rec: &SessionRecording, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for ch in &rec.channels {
        let p = dir.join(ch.file_name());
        fs::write(&p, ch.to_csv())?;
        written.push(p);
    }
    let p = dir.join("transcript.csv");
    fs::write(&p, rec.transcript_csv())?;
    written.push(p);
    Ok(written)
}
