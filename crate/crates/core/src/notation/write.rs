use std::fmt::Write as _;
use std::time::Duration;

use super::lexer::quote;
use super::{default_codebook, Score, ScoreError, DEFAULT_CLIP_LIMIT};
use crate::decoder::CouplingModel;
use crate::lightpaint::Palette;
use crate::trajectory::ProfileConfig;

/// Exact decimal seconds with trailing fractional zeros removed (`2`, `0.25`).
pub fn format_seconds(d: Duration) -> String {
    let nanos = d.subsec_nanos();
    if nanos == 0 {
        return d.as_secs().to_string();
    }
    let frac = format!("{nanos:09}");
    format!("{}.{}", d.as_secs(), frac.trim_end_matches('0'))
}

/// Canonical text for a valid score.
///
/// Header lines equal to their defaults are omitted; poses are written in
/// name order before the frames. The output is byte-deterministic and
/// parses back to an equal score.
pub fn serialize_score(score: &Score) -> Result<String, ScoreError> {
    score.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "ropera {}", score.version);
    let _ = writeln!(out, "servos {}", score.servo_count);

    if score.codebook != default_codebook() {
        out.push_str("codebook");
        for (symbol, angle) in score.codebook.entries() {
            let _ = write!(out, " {symbol}={angle}");
        }
        if score.codebook.clip_limit() != DEFAULT_CLIP_LIMIT {
            let _ = write!(out, " clip={}", score.codebook.clip_limit());
        }
        out.push('\n');
    }

    let defaults = ProfileConfig::default();
    let p = &score.profile;
    if (p.kind, p.v_max, p.transition_fraction, p.step_deg)
        != (
            defaults.kind,
            defaults.v_max,
            defaults.transition_fraction,
            defaults.step_deg,
        )
    {
        let _ = writeln!(
            out,
            "profile {} v_max={} rho={} step={}",
            p.kind, p.v_max, p.transition_fraction, p.step_deg
        );
    }
    if p.sample_rate != defaults.sample_rate {
        let _ = writeln!(out, "rate {}", p.sample_rate);
    }

    let c = &score.coupling;
    if *c != CouplingModel::default() {
        let _ = writeln!(
            out,
            "coupling kappa={} driver=s{} driven=s{}",
            c.kappa,
            c.driver + 1,
            c.driven + 1
        );
    }

    if score.palette != Palette::default() {
        out.push_str("palette");
        for (name, rgb) in score.palette.iter() {
            let _ = write!(out, " {name}={rgb}");
        }
        out.push('\n');
    }

    for (name, symbols) in &score.poses {
        let letters: String = symbols.iter().map(|s| s.letter()).collect();
        let _ = writeln!(out, "pose {name}={letters}");
    }

    for frame in &score.frames {
        let letters: String = frame.symbols.iter().map(|s| s.letter()).collect();
        let flags: String = frame.flags.iter().map(|m| m.as_char()).collect();
        let _ = write!(
            out,
            "frame S={letters} M={flags} T={}",
            format_seconds(frame.duration)
        );
        if let Some(label) = &frame.label {
            let _ = write!(out, " label={}", quote(label));
        }
        out.push('\n');
    }
    Ok(out)
}
