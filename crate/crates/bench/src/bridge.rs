//! Byte-stream bridge between a simulated agent and a controller over TCP.
//!
//! Each side runs one reader thread that only moves received bytes into a
//! channel, and one driver loop that owns all protocol state and writes to
//! the socket. Simulated time follows the wall clock.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use vdp_core::agent::AgentMode;
use vdp_core::controller::{Action, Controller, ControllerOptions, Script, SessionRecording};
use vdp_core::sensor::SensorFixture;
use vdp_core::sim::{SimTime, TimingParams, UartError};
use vdp_core::testbed::{CaptureHost, Testbed};

use crate::BenchError;

const TICK: Duration = Duration::from_millis(1);

fn spawn_reader(mut stream: TcpStream) -> Receiver<Vec<u8>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = [0u8; 4096];
        loop {
            match stream.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    if tx.send(buf[..n].to_vec()).is_err() {
                        break;
                    }
                }
            }
        }
    });
    rx
}

fn elapsed(start: Instant) -> SimTime {
    SimTime(start.elapsed().as_nanos() as u64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub sim_ns: u64,
}

/// Accepts one connection and runs a simulated agent behind it until the
/// peer closes the connection.
pub fn serve_agent(
    listener: &TcpListener,
    mode: AgentMode,
    params: &TimingParams,
    fixture: &SensorFixture,
) -> Result<ServeStats, BenchError> {
    let (stream, _) = listener.accept()?;
    stream.set_nodelay(true)?;
    let rx = spawn_reader(stream.try_clone()?);
    let mut out = stream;
    let mut tb = Testbed::new(mode, params, fixture, CaptureHost::default());
    let mut pending: VecDeque<u8> = VecDeque::new();
    let mut stats = ServeStats::default();
    let start = Instant::now();
    let mut open = true;
    while open || !pending.is_empty() {
        match rx.recv_timeout(TICK) {
            Ok(bytes) => {
                stats.bytes_in += bytes.len() as u64;
                pending.extend(bytes);
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => open = false,
        }
        tb.run_until(elapsed(start).max(tb.now()))?;
        while !pending.is_empty() {
            let chunk: Vec<u8> = pending.iter().copied().collect();
            match tb.inject_downlink(&chunk) {
                Ok(_) => pending.clear(),
                Err(UartError::BufferFull { free, .. }) if free > 0 => {
                    let part: Vec<u8> = pending.drain(..free).collect();
                    tb.inject_downlink(&part).map_err(|e| BenchError::Usage(e.to_string()))?;
                }
                Err(UartError::BufferFull { .. }) => break,
                Err(e) => return Err(BenchError::Usage(e.to_string())),
            }
        }
        if !tb.host.bytes.is_empty() {
            stats.bytes_out += tb.host.bytes.len() as u64;
            match out.write_all(&tb.host.bytes) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe || e.kind() == io::ErrorKind::ConnectionReset => break,
                Err(e) => return Err(e.into()),
            }
            tb.host.bytes.clear();
        }
    }
    stats.sim_ns = tb.now().as_ns();
    Ok(stats)
}

/// Runs `script` against an agent reachable over `stream`, using wall-clock
/// nanoseconds since connection as the controller's time base.
pub fn connect_controller(
    stream: TcpStream,
    model: vdp_core::data::DeviceModel,
    script: &Script,
    opts: ControllerOptions,
) -> Result<SessionRecording, BenchError> {
    stream.set_nodelay(true)?;
    let rx = spawn_reader(stream.try_clone()?);
    let mut out = stream;
    let mut ctrl = Controller::new(model, script.clone(), opts);
    let start = Instant::now();
    loop {
        let now = elapsed(start);
        let wake = match ctrl.next_action(now) {
            Action::Finished => break,
            Action::Send { bytes, .. } => {
                out.write_all(&bytes)?;
                continue;
            }
            Action::WaitUntil(t) => t,
            Action::AwaitReply { deadline } => {
                if now >= deadline {
                    ctrl.on_deadline(now);
                    continue;
                }
                deadline
            }
        };
        let wait = Duration::from_nanos(wake.saturating_sub(now));
        match rx.recv_timeout(wait.max(Duration::from_micros(50))) {
            Ok(bytes) => ctrl.ingest(elapsed(start), &bytes),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => {
                if ctrl.is_finished() {
                    break;
                }
                return Err(io::Error::new(io::ErrorKind::ConnectionAborted, "agent closed the connection").into());
            }
        }
    }
    let _ = out.shutdown(std::net::Shutdown::Both);
    Ok(ctrl.into_recording()?)
}
