//! JSON-lines trajectory files.
//!
//! Each trajectory opens with a header line `{"horizon": T, "K": K}` and is
//! followed by one `{"t": t, "k": k, "a": a}` line per entry. Episode logs
//! add `"r": reward` on entries where a decision was rewarded. Floats are
//! written with 17 significant digits so reading reproduces them exactly.

use std::io::{BufRead, Write};

use serde::Deserialize;

use super::{Event, EventSequence};
use crate::error::{Error, Result};

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_header(w: &mut impl Write, horizon: f64, num_types: usize) -> Result<()> {
    writeln!(w, "{{\"horizon\":{},\"K\":{}}}", format_f64(horizon), num_types)?;
    Ok(())
}

pub fn write_event(w: &mut impl Write, e: &Event, reward: Option<f64>) -> Result<()> {
    match reward {
        Some(r) => writeln!(
            w,
            "{{\"t\":{},\"k\":{},\"a\":{},\"r\":{}}}",
            format_f64(e.t),
            e.k,
            e.a,
            format_f64(r)
        )?,
        None => writeln!(w, "{{\"t\":{},\"k\":{},\"a\":{}}}", format_f64(e.t), e.k, e.a)?,
    }
    Ok(())
}

pub fn write_sequence(w: &mut impl Write, seq: &EventSequence) -> Result<()> {
    write_header(w, seq.horizon, seq.num_types)?;
    for e in &seq.events {
        write_event(w, e, None)?;
    }
    Ok(())
}

/// Writes an episode log; `rewards[i]` annotates `seq.events[i]`.
pub fn write_episode(w: &mut impl Write, seq: &EventSequence, rewards: &[Option<f64>]) -> Result<()> {
    if rewards.len() != seq.events.len() {
        return Err(Error::Incompatible(format!(
            "{} rewards for {} events",
            rewards.len(),
            seq.events.len()
        )));
    }
    write_header(w, seq.horizon, seq.num_types)?;
    for (e, r) in seq.events.iter().zip(rewards) {
        write_event(w, e, *r)?;
    }
    Ok(())
}

pub fn write_all(w: &mut impl Write, seqs: &[EventSequence]) -> Result<()> {
    for s in seqs {
        write_sequence(w, s)?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Header {
        horizon: f64,
        #[serde(rename = "K")]
        k: usize,
    },
    Entry {
        t: f64,
        k: usize,
        a: usize,
        #[serde(default)]
        r: Option<f64>,
    },
}

/// A parsed trajectory together with its optional per-entry rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub sequence: EventSequence,
    pub rewards: Vec<Option<f64>>,
}

pub fn read_episodes(r: impl BufRead) -> Result<Vec<EpisodeRecord>> {
    let mut out: Vec<EpisodeRecord> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(trimmed)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        match parsed {
            Line::Header { horizon, k } => out.push(EpisodeRecord {
                sequence: EventSequence::new(k, horizon),
                rewards: Vec::new(),
            }),
            Line::Entry { t, k, a, r } => {
                let rec = out
                    .last_mut()
                    .ok_or_else(|| Error::Parse(format!("line {}: entry before header", lineno + 1)))?;
                rec.sequence.push(Event::new(t, k, a))?;
                rec.rewards.push(r);
            }
        }
    }
    Ok(out)
}

pub fn read_sequences(r: impl BufRead) -> Result<Vec<EventSequence>> {
    Ok(read_episodes(r)?.into_iter().map(|e| e.sequence).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(gaps in proptest::collection::vec(1e-9f64..3.0, 0..40),
                                   kinds in proptest::collection::vec((1usize..=4, 0usize..=4), 40)) {
            let mut t = 0.0;
            let mut events = Vec::new();
            for (g, (k, a)) in gaps.iter().zip(kinds) {
                t += g;
                events.push(Event::new(t, k, a));
            }
            let seq = EventSequence::from_events(4, t + 1.0 / 3.0, events).unwrap();
            let mut buf = Vec::new();
            write_all(&mut buf, &[seq.clone(), seq.clone()]).unwrap();
            let back = read_sequences(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 2);
            for s in back {
                prop_assert_eq!(s.horizon.to_bits(), seq.horizon.to_bits());
                prop_assert_eq!(s.events.len(), seq.events.len());
                for (x, y) in s.events.iter().zip(&seq.events) {
                    prop_assert_eq!(x.t.to_bits(), y.t.to_bits());
                    prop_assert_eq!((x.k, x.a), (y.k, y.a));
                }
            }
        }
    }

    #[test]
    fn episode_rewards_survive() {
        let seq = EventSequence::from_events(2, 10.0, vec![Event::new(1.0, 1, 2), Event::new(2.0, 2, 0)]).unwrap();
        let rewards = vec![Some(-0.125), None];
        let mut buf = Vec::new();
        write_episode(&mut buf, &seq, &rewards).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"horizon\":"));
        let back = read_episodes(buf.as_slice()).unwrap();
        assert_eq!(back[0].rewards, rewards);
        assert_eq!(back[0].sequence, seq);
    }

    #[test]
    fn entry_before_header_is_an_error() {
        assert!(read_sequences("{\"t\":1.0,\"k\":1,\"a\":0}\n".as_bytes()).is_err());
    }
}
