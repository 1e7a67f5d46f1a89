use std::fs;

use xlris_bench::cache::{DictionaryCache, DictionaryKey};
use xlris_bench::campaign::{Campaign, Method};
use xlris_bench::config::config_hash;
use xlris_bench::formats::{read_json, write_json, ChannelFile, ComplexMatrix, MeasurementFile, ResultFile};
use xlris_bench::WallClock;
use xlris_core::dictionary::{build_angular_dictionary, build_spherical_dictionary};
use xlris_core::estimators::estimate_2dls;
use xlris_core::rng::{complex_normal_matrix, seeded};
use xlris_core::SystemConfig;

fn small() -> SystemConfig {
    SystemConfig {
        ris_ny: 16,
        ris_nz: 2,
        user_ny: 2,
        user_nz: 2,
        bs_ny: 2,
        bs_nz: 2,
        subcarriers: 3,
        paths: 2,
        q: 32,
        n_x: 4,
        grid_ris_y: 16,
        grid_ris_z: 4,
        grid_user_y: 4,
        grid_user_z: 4,
        trials: 2,
        ..Default::default()
    }
}

#[test]
fn complex_matrix_is_column_major() {
    let m = complex_normal_matrix(&mut seeded(1), 3, 2, 1.0);
    let c = ComplexMatrix::from(&m);
    assert_eq!((c.rows, c.cols), (3, 2));
    assert_eq!(c.re[1], m[(1, 0)].re);
    assert_eq!(c.im[3], m[(0, 1)].im);
    assert_eq!(c.to_cmat().unwrap(), m);
    let short = ComplexMatrix { re: vec![0.0; 5], ..c };
    assert!(short.to_cmat().is_err());
}

#[test]
fn channel_round_trips_and_checks_hash() {
    let cfg = small();
    let camp = Campaign::prepare(&cfg, false, &DictionaryCache::default()).unwrap();
    let ch = camp.channel(0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/channel.json");
    write_json(&path, &ChannelFile::new(&cfg, camp.channel_seed(0), &ch)).unwrap();
    let back: ChannelFile = read_json(&path).unwrap();
    assert_eq!(back.config_hash, config_hash(&cfg));
    let again = back.realize(&cfg).unwrap();
    assert_eq!(again.paths, ch.paths);
    assert_eq!(again.h_u, ch.h_u);
    let other = SystemConfig { seed: 9, ..cfg };
    assert!(back.realize(&other).is_err());
}

#[test]
fn measurement_round_trip_reproduces_estimates() {
    let cfg = small();
    let camp = Campaign::prepare(&cfg, false, &DictionaryCache::default()).unwrap();
    let ch = camp.channel(1).unwrap();
    let meas = camp.measure(&ch, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    write_json(&path, &MeasurementFile::new(&cfg, &meas)).unwrap();
    let back = read_json::<MeasurementFile>(&path).unwrap().measurement(&cfg).unwrap();
    assert_eq!(back.y, meas.y);
    assert_eq!(back.setup.noise_var, meas.setup.noise_var);
    assert_eq!(back.noise_seed, meas.noise_seed);
    for k in 0..cfg.subcarriers {
        let d = back.vtilde(k) - meas.vtilde(k);
        assert!(d.iter().all(|z| z.norm() < 1e-15));
    }
    assert_eq!(estimate_2dls(&back).is_ok(), estimate_2dls(&meas).is_ok());

    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    doc["format"] = "xlris-channel".into();
    let wrong: MeasurementFile = serde_json::from_value(doc).unwrap();
    assert!(wrong.measurement(&cfg).is_err());
}

#[test]
fn result_file_carries_hash_seed_and_timings() {
    let cfg = small();
    let camp = Campaign::prepare(&cfg, true, &DictionaryCache::default()).unwrap();
    let ch = camp.channel(0).unwrap();
    let meas = camp.measure(&ch, 0);
    let clock = WallClock::new();
    let out = camp.run(Method::CcMmpsr, &meas, &ch, &clock).unwrap();
    let file = ResultFile::new(&cfg, camp.channel_seed(0), &out.result);
    let text = serde_json::to_string(&file).unwrap();
    let back: ResultFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, file);
    let stages: Vec<&str> = back.timings.iter().map(|t| t.stage.as_str()).collect();
    assert_eq!(stages, ["subspace", "matching", "refine", "rebuild"]);
    assert!(back.timings.iter().all(|t| t.seconds >= 0.0));
    assert_eq!(back.support.unwrap().paths.len(), cfg.paths);
    assert_eq!(back.nmse_per_k.len(), cfg.subcarriers);
}

#[test]
fn dictionary_cache_round_trips_exactly() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let cache = DictionaryCache::new(Some(dir.path().to_path_buf()));
    let built = build_spherical_dictionary(&cfg).unwrap();
    assert!(built.directions.iter().any(|d| d.ring_step.is_infinite()));
    assert_eq!(cache.spherical(&cfg).unwrap(), built);
    let path = cache.path_for(&DictionaryKey::spherical(&cfg)).unwrap();
    assert!(path.exists());
    // Second call reads the file.
    assert_eq!(cache.spherical(&cfg).unwrap(), built);
    assert_eq!(cache.angular(&cfg).unwrap(), build_angular_dictionary(&cfg).unwrap());

    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["format"], "xlris-dictionary");
    assert_eq!(doc["kind"], "spherical");
    assert!(doc["dictionary"]["directions"].as_array().unwrap().iter().any(|d| d["ring_step"].is_null()));
}

#[test]
fn corrupt_cache_entry_is_rebuilt() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let cache = DictionaryCache::new(Some(dir.path().to_path_buf()));
    let path = cache.path_for(&DictionaryKey::angular(&cfg)).unwrap();
    fs::write(&path, "{ truncated").unwrap();
    assert_eq!(cache.angular(&cfg).unwrap(), build_angular_dictionary(&cfg).unwrap());
    assert!(serde_json::from_str::<serde_json::Value>(&fs::read_to_string(&path).unwrap()).is_ok());
}

#[test]
fn cache_key_ignores_unrelated_fields() {
    let cfg = small();
    let other = SystemConfig { q: 7, sigma_p2_dbm: 3.0, trials: 9, ..cfg.clone() };
    assert_eq!(DictionaryKey::spherical(&cfg), DictionaryKey::spherical(&other));
    let finer = SystemConfig { mu_m: 0.7, ..cfg.clone() };
    assert_ne!(DictionaryKey::spherical(&cfg).file_name(), DictionaryKey::spherical(&finer).file_name());
    assert_eq!(DictionaryKey::angular(&cfg), DictionaryKey::angular(&finer));
}
