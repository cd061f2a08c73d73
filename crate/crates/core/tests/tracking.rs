use poleline::sim::{simulate, Pole, Scene, SensorConfig, VelocityProfile};
use poleline::{run_pipeline, PipelineConfig};

#[test]
fn one_track_per_pole_at_constant_speed() {
    let poles: Vec<Pole> = (0..8)
        .map(|k| Pole {
            x: 10.0 + 11.0 * k as f64,
            y: 5.0 + (k * 4 % 10) as f64,
            width: 0.3,
        })
        .collect();
    let scene = Scene {
        poles,
        v_top: 30,
        v_bot: 150,
    };
    let profile = VelocityProfile::constant(10.0, 10_500_000).unwrap();
    let sensor = SensorConfig::default();
    let sim = simulate(&scene, &profile, &sensor).unwrap();
    let out = run_pipeline(&sim.events, &sim.poses, &sensor.intrinsics, &PipelineConfig::default()).unwrap();

    assert_eq!(out.tracks.len(), scene.poles.len(), "{:?}", out.stats);
    // each pole's passage is covered by exactly one track
    for (i, p) in scene.poles.iter().enumerate() {
        let t_pass = (p.x / 10.0 * 1e6) as u64;
        let covering = out
            .tracks
            .iter()
            .filter(|t| t.t_first() <= t_pass && t_pass <= t.t_last())
            .count();
        assert_eq!(covering, 1, "pole {i}");
    }
    for t in &out.tracks {
        assert!(t.samples.len() >= 2);
        assert!(t.samples.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(t.samples.iter().all(|&(_, x)| (0.0..=240.0).contains(&x)));
    }
}
