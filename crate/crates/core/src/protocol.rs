//! Command streams and the bridge wire protocol.
//!
//! Records are one JSON object per line, UTF-8, `\n` terminated, with fields
//! in the order `seq`, `t`, `angles`, `speed` (omitted when absent), `last`:
//!
//! ```text
//! {"seq":0,"t":0.0,"angles":[0.0,45.0,-45.0,-45.0,0.0,135.0],"speed":100,"last":true}
//! ```
//!
//! The bridge answers each record with `ack <seq>` or `nack <seq> <reason>`.
//! See `docs/protocol.md` for the byte-level description.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::JointTargets;
use crate::notation::DEFAULT_CLIP_LIMIT;
use crate::trajectory::ProfileConfig;

/// Sends lagging their schedule by more than this are reported.
pub const OVERRUN_WARNING: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandMessage {
    pub seq: u64,
    /// Scheduled send time, seconds from stream start.
    pub t: f64,
    /// Commanded joint angles, degrees.
    pub angles: Vec<f64>,
    /// Vendor speed hint, 1–100.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<u8>,
    pub last: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("clip_violation")]
    ClipViolation,
    #[error("speed_out_of_range")]
    SpeedOutOfRange,
}

impl CommandMessage {
    /// The record as one line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn from_line(line: &str) -> Result<Self, RecordError> {
        let msg: CommandMessage =
            serde_json::from_str(line).map_err(|e| RecordError::Malformed(e.to_string()))?;
        msg.check()?;
        Ok(msg)
    }

    pub fn check(&self) -> Result<(), RecordError> {
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(RecordError::Malformed(
                "t must be a non-negative number".into(),
            ));
        }
        if self
            .angles
            .iter()
            .any(|a| !a.is_finite() || a.abs() > DEFAULT_CLIP_LIMIT)
        {
            return Err(RecordError::ClipViolation);
        }
        if self.speed.is_some_and(|s| !(1..=100).contains(&s)) {
            return Err(RecordError::SpeedOutOfRange);
        }
        Ok(())
    }
}

/// `round(100 · (max_delta / v_max) / motion_time)`, clamped to 1–100.
/// `None` when nothing moves.
pub fn speed_hint(max_delta: f64, motion_time: f64, v_max: f64) -> Option<u8> {
    if max_delta <= 0.0 || motion_time <= 0.0 {
        return None;
    }
    let raw = (100.0 * (max_delta / v_max) / motion_time).round();
    Some(raw.clamp(1.0, 100.0) as u8)
}

/// One record per frame, scheduled at the frame's start time.
///
/// The speed hint uses the profile's motion time for the move from the
/// previous command (`start` for the first frame), capped at the frame
/// duration.
pub fn compile_stream(
    start: &[f64],
    targets: &[JointTargets],
    config: &ProfileConfig,
) -> Vec<CommandMessage> {
    let mut out = Vec::with_capacity(targets.len());
    let mut elapsed = Duration::ZERO;
    let mut prev = start;
    for (i, target) in targets.iter().enumerate() {
        let max_delta = prev
            .iter()
            .zip(&target.angles)
            .fold(0.0_f64, |m, (a, b)| m.max((b - a).abs()));
        let duration = target.duration_s();
        let motion = config.motion_time(max_delta, duration).min(duration);
        out.push(CommandMessage {
            seq: i as u64,
            t: elapsed.as_secs_f64(),
            angles: target.angles.clone(),
            speed: speed_hint(max_delta, motion, config.v_max),
            last: i + 1 == targets.len(),
        });
        elapsed += target.duration;
        prev = &target.angles;
    }
    out
}

/// Newline-terminated records, byte-deterministic.
pub fn encode_stream(stream: &[CommandMessage]) -> String {
    let mut out = String::new();
    for msg in stream {
        out.push_str(&msg.to_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Ack(u64),
    Nack(u64, String),
}

impl Reply {
    pub fn parse(line: &str) -> Option<Reply> {
        let line = line.trim_end_matches(['\r', '\n']);
        let mut parts = line.splitn(3, ' ');
        let word = parts.next()?;
        let seq = parts.next()?.parse().ok()?;
        match word {
            "ack" if parts.next().is_none() => Some(Reply::Ack(seq)),
            "nack" => Some(Reply::Nack(seq, parts.next().unwrap_or("").to_string())),
            _ => None,
        }
    }

    pub fn to_line(&self) -> String {
        match self {
            Reply::Ack(seq) => format!("ack {seq}"),
            Reply::Nack(seq, reason) => format!("nack {seq} {reason}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum PlayError {
    #[error("could not connect to {addr}: {source}")]
    ConnectionRefused { addr: String, source: io::Error },
    #[error("bridge rejected record {seq}: {reason}")]
    PeerNack { seq: u64, reason: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("connection lost: {0}")]
    Io(#[from] io::Error),
    #[error("timed out waiting for acknowledgements ({acked} of {sent})")]
    AckTimeout { acked: usize, sent: usize },
}

/// A record sent later than its schedule allows.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOverrun {
    pub seq: u64,
    pub lag: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlayReport {
    /// Actual send offsets from stream start, per record.
    pub sent_at: Vec<Duration>,
    pub acked: Vec<u64>,
    pub overruns: Vec<ScheduleOverrun>,
}

#[derive(Debug, Clone)]
pub struct PlayOptions {
    /// How long to wait for outstanding acks after the last send.
    pub ack_timeout: Duration,
}

impl Default for PlayOptions {
    fn default() -> Self {
        PlayOptions {
            ack_timeout: Duration::from_secs(5),
        }
    }
}

/// Blocks until `deadline`; never returns early.
fn sleep_until(deadline: Instant) {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        thread::sleep(deadline - now);
    }
}

/// Streams `stream` to a bridge at wall-clock schedule.
///
/// The calling thread sends; a second thread reads replies. Each record goes
/// out no earlier than its `t` after the first send, in `seq` order. The first
/// `nack` stops the stream. Returns once every record is acknowledged.
pub fn play(
    stream: &[CommandMessage],
    addr: impl ToSocketAddrs + std::fmt::Display,
    options: &PlayOptions,
) -> Result<PlayReport, PlayError> {
    let label = addr.to_string();
    let socket = TcpStream::connect(addr).map_err(|source| PlayError::ConnectionRefused {
        addr: label,
        source,
    })?;
    socket.set_nodelay(true)?;
    let reader = BufReader::new(socket.try_clone()?);
    let mut writer = socket;

    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel::<Result<Reply, PlayError>>();
    let reader_stop = Arc::clone(&stop);
    let reader_thread = thread::spawn(move || {
        for line in reader.lines() {
            let msg = match line {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => Reply::parse(&line)
                    .ok_or_else(|| PlayError::Protocol(format!("unexpected reply {line:?}"))),
                Err(e) => Err(PlayError::Io(e)),
            };
            if matches!(msg, Ok(Reply::Nack(..)) | Err(_)) {
                reader_stop.store(true, Ordering::SeqCst);
            }
            if tx.send(msg).is_err() {
                break;
            }
        }
    });

    let mut report = PlayReport::default();
    let mut expected_ack = stream.iter().map(|m| m.seq);
    let check = |reply: Result<Reply, PlayError>,
                 report: &mut PlayReport,
                 expected: &mut dyn Iterator<Item = u64>|
     -> Result<(), PlayError> {
        match reply? {
            Reply::Ack(seq) => {
                if expected.next() != Some(seq) {
                    return Err(PlayError::Protocol(format!("ack {seq} out of order")));
                }
                report.acked.push(seq);
                Ok(())
            }
            Reply::Nack(seq, reason) => Err(PlayError::PeerNack { seq, reason }),
        }
    };

    let start = Instant::now();
    let result = (|| {
        for msg in stream {
            let due = start + Duration::from_secs_f64(msg.t);
            sleep_until(due);
            if stop.load(Ordering::SeqCst) {
                break;
            }
            let sent = Instant::now();
            writer.write_all(msg.to_line().as_bytes())?;
            writer.write_all(b"\n")?;
            writer.flush()?;
            let lag = sent - due;
            if lag > OVERRUN_WARNING {
                report.overruns.push(ScheduleOverrun { seq: msg.seq, lag });
            }
            report.sent_at.push(sent - start);
            while let Ok(reply) = rx.try_recv() {
                check(reply, &mut report, &mut expected_ack)?;
            }
        }
        let deadline = Instant::now() + options.ack_timeout;
        while report.acked.len() < report.sent_at.len() {
            let left = deadline.saturating_duration_since(Instant::now());
            match rx.recv_timeout(left) {
                Ok(reply) => check(reply, &mut report, &mut expected_ack)?,
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    return Err(PlayError::AckTimeout {
                        acked: report.acked.len(),
                        sent: report.sent_at.len(),
                    })
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => {
                    return Err(PlayError::Protocol("bridge closed the connection".into()))
                }
            }
        }
        Ok(())
    })();
    let _ = writer.shutdown(std::net::Shutdown::Both);
    let _ = reader_thread.join();
    result.map(|()| report)
}

/// Writes the stream with its schedule instead of sending it.
pub fn dry_run(stream: &[CommandMessage], out: &mut dyn Write) -> io::Result<()> {
    for msg in stream {
        writeln!(out, "t={:>9.3}s  {}", msg.t, msg.to_line())?;
    }
    Ok(())
}

/// In-process bridge speaking the wire protocol, recording what it receives.
///
/// It accepts a single connection, validates each record, answers `ack` or
/// `nack` and logs accepted records with their receive time relative to the
/// connection being accepted.
pub mod stub {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize)]
    pub struct LoggedRecord {
        #[serde(flatten)]
        pub message: CommandMessage,
        pub recv_t: f64,
    }

    pub struct StubBridge {
        pub addr: SocketAddr,
        handle: thread::JoinHandle<io::Result<Vec<LoggedRecord>>>,
    }

    impl StubBridge {
        /// Binds an ephemeral localhost port.
        pub fn spawn() -> io::Result<Self> {
            Self::spawn_with(|_| None)
        }

        /// `reject` may return a reason to `nack` an otherwise valid record.
        pub fn spawn_with(
            reject: impl Fn(&CommandMessage) -> Option<String> + Send + 'static,
        ) -> io::Result<Self> {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let handle = thread::spawn(move || {
                let (socket, _) = listener.accept()?;
                let accepted = Instant::now();
                let mut writer = socket.try_clone()?;
                let mut log = Vec::new();
                for line in BufReader::new(socket).lines() {
                    let line = line?;
                    let recv_t = accepted.elapsed().as_secs_f64();
                    let reply = match CommandMessage::from_line(&line) {
                        Ok(msg) => match reject(&msg) {
                            Some(reason) => Reply::Nack(msg.seq, reason),
                            None => {
                                let seq = msg.seq;
                                log.push(LoggedRecord {
                                    message: msg,
                                    recv_t,
                                });
                                Reply::Ack(seq)
                            }
                        },
                        Err(e) => {
                            let seq = serde_json::from_str::<serde_json::Value>(&line)
                                .ok()
                                .and_then(|v| v.get("seq").and_then(|s| s.as_u64()))
                                .unwrap_or(0);
                            Reply::Nack(seq, e.to_string().replace(' ', "_"))
                        }
                    };
                    if writeln!(writer, "{}", reply.to_line()).is_err() {
                        break;
                    }
                }
                Ok(log)
            });
            Ok(StubBridge { addr, handle })
        }

        /// Waits for the peer to disconnect and returns the log.
        pub fn finish(self) -> io::Result<Vec<LoggedRecord>> {
            self.handle.join().expect("stub bridge thread panicked")
        }
    }
}
