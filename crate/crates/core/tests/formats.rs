use std::path::Path;

use fivebar::io::{self, ProjectConfig};
use fivebar::synthesis::{self, DesignVector};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/desired_path_surrogate.csv");
const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/config/default.toml");

#[test]
fn bundled_path_matches_the_generator() {
    let file = io::load_path_csv(Path::new(DATA)).unwrap();
    let generated = io::default_desired_path();
    assert!(file.len() >= 50);
    assert_eq!(file.len(), generated.len());
    for (a, b) in file.points().iter().zip(generated.points()) {
        assert!(a.distance(*b) < 1e-9);
    }
}

#[test]
fn bundled_config_is_the_prototype() {
    assert_eq!(ProjectConfig::load(CONFIG).unwrap(), ProjectConfig::prototype());
    assert_eq!(ProjectConfig::load("default").unwrap(), ProjectConfig::prototype());
}

// Independent extended-precision evaluation of the prototype on the bundled path.
#[test]
fn prototype_error_on_bundled_path() {
    let desired = io::default_desired_path();
    let e = synthesis::objective_error(&DesignVector::prototype(), desired.points()).unwrap();
    assert!((e - 6.888655199404915).abs() < 1e-9, "E = {e}");
}

#[test]
fn design_record_round_trips_through_json() {
    let d = DesignVector::prototype();
    let text = serde_json::to_string(&io::DesignRecord::from(&d)).unwrap();
    let back: io::DesignRecord = serde_json::from_str(&text).unwrap();
    let back = DesignVector::from(&back);
    for (a, b) in back.to_array().iter().zip(d.to_array()) {
        assert!((a - b).abs() < 1e-12);
    }
}
