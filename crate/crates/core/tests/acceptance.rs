//! Acceptance suite. Each test prints one `PASS`/`FAIL` line and asserts.
//!
//! Run with `cargo test -p poleline --test acceptance -- --nocapture --test-threads=1`.

use std::sync::Mutex;
use std::time::Instant;

use poleline::bench::{bench, random_stream};
use poleline::event::{events_to_csv, Event, Polarity};
use poleline::hough::{CellUpdateSet, HoughConfig, HoughState};
use poleline::sim::{simulate, Pole, Scene, SensorConfig, SimOutput, VelocityProfile};
use poleline::triangulate::{build_dlt_matrix, match_and_rmse, triangulate, TriangulationConfig};
use poleline::{run_pipeline, CameraIntrinsics, Error, PipelineConfig, Pose2, PoseLog, Track};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// timing criteria must not overlap with other work
static SERIAL: Mutex<()> = Mutex::new(());

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {n} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// 20 poles about 10 m apart at 5-15 m depth, passed at 10 m/s.
fn pole_scene(seed: u64) -> (Scene, VelocityProfile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poles: Vec<Pole> = (0..20)
        .map(|k| Pole {
            x: 12.0 + 10.0 * k as f64 + rng.random_range(-1.5..1.5),
            y: rng.random_range(5.0..15.0),
            width: rng.random_range(0.25..0.35),
        })
        .collect();
    let end = poles.last().unwrap().x + 12.0;
    let profile = VelocityProfile::constant(10.0, (end / 10.0 * 1e6) as u64).unwrap();
    (
        Scene {
            poles,
            v_top: 20,
            v_bot: 160,
        },
        profile,
    )
}

fn render(noise_share: f64) -> SimOutput {
    let (scene, profile) = pole_scene(7);
    let clean = simulate(&scene, &profile, &SensorConfig::default()).unwrap();
    if noise_share == 0.0 {
        return clean;
    }
    let (t0, t1) = profile.span();
    let signal_rate = clean.signal_events as f64 / ((t1 - t0) as f64 * 1e-6);
    let sensor = SensorConfig {
        noise_rate: noise_share * signal_rate,
        seed: 11,
        ..Default::default()
    };
    simulate(&scene, &profile, &sensor).unwrap()
}

fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort();
    v
}

fn mismatches(events: &[Event]) -> usize {
    let mut state = HoughState::new(HoughConfig::default()).unwrap();
    let mut upd = CellUpdateSet::default();
    let mut bad = 0;
    for &e in events {
        let it = sorted(state.step(e, &mut upd));
        if it != sorted(&state.full_nms_oracle(e.polarity)) {
            bad += 1;
        }
    }
    bad
}

#[test]
fn criterion_1_oracle_equivalence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let scene: Vec<Event> = render(0.05).events.into_iter().take(100_000).collect();
    let random = random_stream(100_000, 100_000.0, 240, 180, 5);
    let (a, b) = (mismatches(&scene), mismatches(&random));
    let pass = scene.len() == 100_000 && a == 0 && b == 0;
    report(
        1,
        "oracle equivalence",
        pass,
        format!("pole scene {a} mismatches, random stream {b} mismatches"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_speedup() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let events: Vec<Event> = render(0.05).events.into_iter().take(1_000_000).collect();
    let cfg = HoughConfig::default();
    assert_eq!((cfg.theta_bins(), cfg.r_bins(), cfg.window_size), (21, 261, 300));
    let r = bench(&events, &cfg).unwrap();
    let pass = events.len() == 1_000_000 && r.iterative.mean * 3.0 <= r.full.mean;
    report(
        2,
        "speedup",
        pass,
        format!(
            "full {:.3} us/ev, iterative {:.3} us/ev, ratio {:.2}",
            r.full.mean,
            r.iterative.mean,
            r.speedup()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_throughput() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let sim = render(0.05);
    let cfg = PipelineConfig::default();
    let start = Instant::now();
    let out = run_pipeline(&sim.events, &sim.poses, &CameraIntrinsics::davis240(), &cfg).unwrap();
    let per_event = start.elapsed().as_secs_f64() * 1e6 / sim.events.len() as f64;
    let rtf = per_event * 1e-6 * 100_000.0;
    let pass = per_event <= 10.0 && rtf < 1.0;
    report(
        3,
        "throughput",
        pass,
        format!(
            "{per_event:.3} us/ev over {} events, real-time factor at 100k ev/s {rtf:.3}",
            out.stats.events
        ),
    );
    assert!(pass);
}

struct Outcome {
    singles: usize,
    false_positives: usize,
    rmse: f64,
}

fn map_scene(noise_share: f64) -> Outcome {
    let sim = render(noise_share);
    let out = run_pipeline(
        &sim.events,
        &sim.poses,
        &CameraIntrinsics::davis240(),
        &PipelineConfig::default(),
    )
    .unwrap();
    let r = match_and_rmse(&out.map, &sim.ground_truth, 4.0, Some(&sim.poses)).unwrap();
    // landmarks assigned to their nearest pole within the rejection radius
    let mut per_pole = vec![0usize; sim.ground_truth.len()];
    for l in &out.map.landmarks {
        let nearest = sim
            .ground_truth
            .iter()
            .enumerate()
            .map(|(j, g)| (j, ((l.x - g.x).powi(2) + (l.y - g.y).powi(2)).sqrt()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, d)) = nearest {
            if d <= 4.0 {
                per_pole[j] += 1;
            }
        }
    }
    Outcome {
        singles: per_pole.iter().filter(|&&n| n == 1).count(),
        false_positives: r.false_positives,
        rmse: r.rmse,
    }
}

#[test]
fn criterion_4_reliability() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let o = map_scene(0.05);
    let pass = o.singles >= 18 && o.false_positives <= 2;
    report(
        4,
        "end-to-end reliability",
        pass,
        format!(
            "{}/20 poles with exactly one landmark, {} false positives",
            o.singles, o.false_positives
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_mapping_accuracy() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let clean = map_scene(0.0);
    let noisy = map_scene(0.05);
    let pass = clean.rmse <= 0.2 && noisy.rmse <= 0.5;
    report(
        5,
        "mapping accuracy",
        pass,
        format!("rmse noiseless {:.4} m, 5% noise {:.4} m", clean.rmse, noisy.rmse),
    );
    assert!(pass);
}

fn track(samples: Vec<(u64, f64)>) -> Track {
    let f = poleline::track::LineFit {
        t_ref: 0,
        x_ref: 0.0,
        slope: 0.0,
    };
    Track {
        id: 0,
        samples,
        positive: f,
        negative: f,
    }
}

#[test]
fn criterion_6_dlt() {
    let intr = CameraIntrinsics {
        u0: 120.0,
        alpha_x: 240.0,
        ..CameraIntrinsics::davis240()
    };
    let cfg = TriangulationConfig::default();
    let poses = PoseLog::new(vec![Pose2::new(0, 0.0, 0.0, 0.0), Pose2::new(1_000_000, 1.0, 0.0, 0.0)]).unwrap();
    let fixture = track(vec![(0, 132.0), (1_000_000, 108.0)]);
    let a = build_dlt_matrix(&fixture, &poses, &intr, &cfg).unwrap();
    let rows_ok = a.len() == 2 && (a[0][1] - 0.05).abs() < 1e-15 && (a[1][1] + 0.05).abs() < 1e-15;
    let l = triangulate(&fixture, &poses, &intr, &cfg).unwrap();
    let rel = ((l.x - 0.5).abs() / 0.5).max((l.y - 10.0).abs() / 10.0);

    let same = track(vec![(0, 132.0), (0, 132.0)]);
    let degenerate = matches!(triangulate(&same, &poses, &intr, &cfg), Err(Error::DegenerateGeometry));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let base = PoseLog::new(
        (0..10)
            .map(|k| Pose2::new(k * 100_000, 0.4 * k as f64, 0.0, 0.0))
            .collect(),
    )
    .unwrap();
    for _ in 0..200 {
        let pole = [rng.random_range(-5.0..5.0), rng.random_range(4.0..20.0)];
        let obs = track(
            base.poses()
                .iter()
                .map(|p| {
                    let m = p.inverse_matrix();
                    let lat = m[0][0] * pole[0] + m[0][1] * pole[1] + m[0][2];
                    let depth = m[1][0] * pole[0] + m[1][1] * pole[1] + m[1][2];
                    (p.t, intr.u0 + intr.alpha_x * lat / depth + rng.random_range(-0.5..0.5))
                })
                .collect(),
        );
        let g = Pose2::new(
            0,
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            rng.random_range(-3.0..3.0),
        );
        let moved = PoseLog::new(
            base.poses()
                .iter()
                .map(|p| {
                    let q = g.compose(p);
                    Pose2::new(p.t, q.x, q.y, q.theta)
                })
                .collect(),
        )
        .unwrap();
        let l0 = triangulate(&obs, &base, &intr, &cfg).unwrap();
        let l1 = triangulate(&obs, &moved, &intr, &cfg).unwrap();
        let expect = g.transform_point([l0.x, l0.y]);
        let scale = 1.0 + expect[0].abs().max(expect[1].abs());
        worst = worst.max((l1.x - expect[0]).abs().max((l1.y - expect[1]).abs()) / scale);
    }
    let pass = rows_ok && rel <= 1e-9 && degenerate && worst <= 1e-9;
    report(
        6,
        "DLT correctness",
        pass,
        format!(
            "fixture relative error {rel:.2e}, rank-deficient rejected {degenerate}, frame change error {worst:.2e}"
        ),
    );
    assert!(pass);
}

fn nms_valid(state: &HoughState, cfg: &HoughConfig) -> bool {
    let (n_theta, n_r) = state.shape();
    for pol in Polarity::BOTH {
        let acc = state.accumulator(pol);
        let maxima = state.maxima(pol);
        for m in maxima {
            let (t, r) = (m.theta as i64, m.r as i64);
            let v = acc[t as usize * n_r + r as usize];
            if u32::from(v) < cfg.threshold {
                return false;
            }
            for dt in -1..=1 {
                for dr in -1..=1 {
                    let (tt, rr) = (t + dt, r + dr);
                    if (dt, dr) == (0, 0) || tt < 0 || rr < 0 || tt >= n_theta as i64 || rr >= n_r as i64 {
                        continue;
                    }
                    if acc[tt as usize * n_r + rr as usize] >= v {
                        return false;
                    }
                }
            }
        }
        for (i, a) in maxima.iter().enumerate() {
            for b in &maxima[i + 1..] {
                let d2 = (a.theta as f64 - b.theta as f64).powi(2) + (a.r as f64 - b.r as f64).powi(2);
                if d2 <= f64::from(cfg.suppression_radius).powi(2) {
                    return false;
                }
            }
        }
    }
    true
}

fn recount_ok(state: &HoughState) -> bool {
    let (_, n_r) = state.shape();
    Polarity::BOTH.iter().all(|&pol| {
        let mut acc = vec![0u16; state.accumulator(pol).len()];
        for (x, y) in state.window(pol) {
            for c in poleline::hough::hypothesis_cells(u32::from(x), u32::from(y), state.config()) {
                acc[c.theta as usize * n_r + c.r as usize] += 1;
            }
        }
        acc == state.accumulator(pol)
    })
}

#[test]
fn criterion_7_properties() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = HoughConfig::default();
    let mut nms_ok = true;
    let mut counts_ok = true;
    for seed in 0..4u64 {
        let mut events = random_stream(5_000, 100_000.0, 240, 180, seed);
        events.extend(
            render(0.05)
                .events
                .into_iter()
                .skip(seed as usize * 40_000)
                .take(10_000)
                .map(|mut e| {
                    e.t += 50_000;
                    e
                }),
        );
        events.sort_by_key(|e| e.t);
        let mut state = HoughState::new(cfg.clone()).unwrap();
        let mut upd = CellUpdateSet::default();
        for (i, &e) in events.iter().enumerate() {
            state.step(e, &mut upd);
            nms_ok &= nms_valid(&state, &cfg);
            if i % 250 == 0 {
                counts_ok &= recount_ok(&state);
            }
        }
        counts_ok &= recount_ok(&state);
    }

    let (scene, profile) = pole_scene(7);
    let sensor = SensorConfig {
        noise_rate: 20_000.0,
        seed: 4,
        ..Default::default()
    };
    let a = simulate(&scene, &profile, &sensor).unwrap();
    let b = simulate(&scene, &profile, &sensor).unwrap();
    let sim_ok = events_to_csv(&a.events) == events_to_csv(&b.events) && a.poses.to_csv() == b.poses.to_csv();

    let cfg = PipelineConfig {
        subsample: 0.3,
        seed: 9,
        ..Default::default()
    };
    let intr = CameraIntrinsics::davis240();
    let p = run_pipeline(&a.events, &a.poses, &intr, &cfg).unwrap();
    let q = run_pipeline(&a.events, &a.poses, &intr, &cfg).unwrap();
    let pipe_ok = poleline::hough::detections_to_csv(&p.detections)
        == poleline::hough::detections_to_csv(&q.detections)
        && poleline::track::tracks_to_csv(&p.tracks) == poleline::track::tracks_to_csv(&q.tracks)
        && p.map.to_csv() == q.map.to_csv();

    let pass = nms_ok && counts_ok && sim_ok && pipe_ok;
    report(
        7,
        "property suites",
        pass,
        format!("nms validity {nms_ok}, recount {counts_ok}, simulator determinism {sim_ok}, pipeline determinism {pipe_ok}"),
    );
    assert!(pass);
}
