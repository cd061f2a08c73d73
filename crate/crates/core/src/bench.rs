//! Timing of the iterative and full-recompute suppression paths, with an
//! event-by-event check that both produce the same maxima.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::hough::{Cell, CellUpdateSet, HoughConfig, HoughState};

/// Length of an event array, microseconds.
pub const ARRAY_PERIOD: u64 = 33_000;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub max: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Summary {
            mean,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub events: usize,
    /// Per-event processing time in microseconds.
    pub iterative: Summary,
    pub full: Summary,
    /// Events per second over 33 ms arrays.
    pub event_rate: Summary,
    /// Iterative mean per-event time times mean event rate.
    pub real_time_factor: f64,
    /// Share of 33 ms arrays whose iterative processing took longer than 33 ms.
    pub delayed_fraction: f64,
    /// Average number of full grids scanned per update by the iterative path.
    pub scan_fraction: f64,
}

impl BenchReport {
    pub fn speedup(&self) -> f64 {
        self.full.mean / self.iterative.mean
    }

    pub fn to_text(&self) -> String {
        let row = |name: &str, s: &Summary| format!("{name:<10}{:>12.3}{:>12.3}{:>12.3}\n", s.mean, s.max, s.std);
        let mut s = format!("events {}\n", self.events);
        s += &format!("{:<10}{:>12}{:>12}{:>12}\n", "t_p [us]", "mean", "max", "std");
        s += &row("full", &self.full);
        s += &row("iterative", &self.iterative);
        s += &format!("speedup {:.2}\n", self.speedup());
        s += &format!(
            "event rate [ev/s] mean {:.0} max {:.0} std {:.0}\n",
            self.event_rate.mean, self.event_rate.max, self.event_rate.std
        );
        s += &format!("real-time factor {:.4}\n", self.real_time_factor);
        s += &format!("delayed arrays {:.4}\n", self.delayed_fraction);
        s += &format!("grid scans per update {:.5}\n", self.scan_fraction);
        s
    }
}

fn digest(maxima: &[Cell], scratch: &mut Vec<Cell>) -> u64 {
    scratch.clear();
    scratch.extend_from_slice(maxima);
    scratch.sort_unstable();
    let mut h = DefaultHasher::new();
    scratch.hash(&mut h);
    h.finish()
}

fn time_path(events: &[Event], cfg: &HoughConfig, full: bool) -> Result<(Vec<f64>, Vec<u64>, f64)> {
    let mut state = HoughState::new(cfg.clone())?;
    let mut upd = CellUpdateSet::default();
    let mut times = Vec::with_capacity(events.len());
    let mut digests = Vec::with_capacity(events.len());
    let mut scratch = Vec::new();
    for &e in events {
        let start = Instant::now();
        let maxima = if full {
            state.step_full(e, &mut upd)
        } else {
            state.step(e, &mut upd)
        };
        times.push(start.elapsed().as_secs_f64() * 1e6);
        digests.push(digest(maxima, &mut scratch));
    }
    let (n_theta, n_r) = state.shape();
    Ok((
        times,
        digests,
        state.stats().full_scan_equivalents_per_update(n_theta * n_r),
    ))
}

/// Runs both suppression variants over `events` and reports their timing.
/// Fails with the index of the first event after which the maxima differ.
pub fn bench(events: &[Event], cfg: &HoughConfig) -> Result<BenchReport> {
    let (it_times, it_digests, scan_fraction) = time_path(events, cfg, false)?;
    let (full_times, full_digests, _) = time_path(events, cfg, true)?;
    if let Some(index) = it_digests.iter().zip(&full_digests).position(|(a, b)| a != b) {
        return Err(Error::EquivalenceFailure { index });
    }
    let mut rates = Vec::new();
    let mut delayed = 0usize;
    if let (Some(first), Some(last)) = (events.first(), events.last()) {
        let n_arrays = ((last.t - first.t) / ARRAY_PERIOD + 1) as usize;
        let mut counts = vec![0usize; n_arrays];
        let mut busy = vec![0.0f64; n_arrays];
        for (e, t) in events.iter().zip(&it_times) {
            let k = ((e.t - first.t) / ARRAY_PERIOD) as usize;
            counts[k] += 1;
            busy[k] += t;
        }
        rates = counts
            .iter()
            .map(|&c| c as f64 / (ARRAY_PERIOD as f64 * 1e-6))
            .collect();
        delayed = busy.iter().filter(|&&b| b > ARRAY_PERIOD as f64).count();
    }
    let iterative = Summary::of(&it_times);
    let event_rate = Summary::of(&rates);
    Ok(BenchReport {
        events: events.len(),
        iterative,
        full: Summary::of(&full_times),
        real_time_factor: iterative.mean * 1e-6 * event_rate.mean,
        delayed_fraction: if rates.is_empty() {
            0.0
        } else {
            delayed as f64 / rates.len() as f64
        },
        event_rate,
        scan_fraction,
    })
}

/// Uniformly random events at a constant rate, for timing runs.
pub fn random_stream(n: usize, rate: f64, width: u16, height: u16, seed: u64) -> Vec<Event> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let step = 1e6 / rate;
    (0..n)
        .map(|i| Event {
            t: (i as f64 * step) as u64,
            x: rng.random_range(0..width),
            y: rng.random_range(0..height),
            polarity: if rng.random_bool(0.5) {
                crate::event::Polarity::Positive
            } else {
                crate::event::Polarity::Negative
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream() {
        let r = bench(&[], &HoughConfig::default()).unwrap();
        assert_eq!(r.events, 0);
        assert_eq!(r.iterative, Summary::default());
    }

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.max, s.std), (2.0, 3.0, 1.0));
    }

    #[test]
    fn random_stream_agrees() {
        let ev = random_stream(5_000, 100_000.0, 240, 180, 3);
        let r = bench(&ev, &HoughConfig::default()).unwrap();
        assert_eq!(r.events, 5_000);
        assert!(r.iterative.mean <= r.iterative.max && r.full.mean <= r.full.max);
        assert!((r.real_time_factor - r.iterative.mean * 1e-6 * r.event_rate.mean).abs() < 1e-12);
        assert!(r.scan_fraction < 0.05, "{}", r.scan_fraction);
    }
}
