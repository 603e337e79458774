mod common;

use common::*;
use condforest::coding::{contour_from_height, height_from_walk, walk_from_forest, LatticePath};
use condforest::conditioned::{sample_conditioned_forest, ConditionedForestSpec};
use condforest::forest::{sample_gw_forest, Forest};
use condforest::invariance::{invariance_experiment, ExperimentConfig};
use condforest::io::*;
use condforest::law::OffspringLaw;
use condforest::realpath::RealPath;
use condforest::realtree::excursion_metric;
use condforest::Error;

#[test]
fn figure_one_tree_json() {
    let json = tree_to_json(&figure_one()).unwrap();
    assert!(json.contains("\"child_counts\""));
    assert_eq!(tree_from_json(&json).unwrap(), figure_one());
    assert!(tree_from_json(r#"{"child_counts":[1]}"#).is_err());
}

#[test]
fn random_forests_round_trip() {
    let sub = OffspringLaw::finite(vec![0.5, 0.3, 0.2]).unwrap();
    for seed in 0..1000u64 {
        let forest = if seed % 2 == 0 {
            sample_gw_forest(&sub, 1 + (seed % 7) as usize, seed).unwrap()
        } else {
            let spec = ConditionedForestSpec::new(OffspringLaw::critical_geometric(), 1 + seed % 5, 40).unwrap();
            sample_conditioned_forest(&spec, seed).unwrap()
        };
        let json = forest_to_json(&forest).unwrap();
        assert_eq!(forest_from_json(&json).unwrap(), forest);
        let walk = walk_from_forest(&forest);
        let csv = lattice_path_to_csv(&walk).unwrap();
        assert_eq!(lattice_path_from_csv(&csv).unwrap(), walk);
        let h = height_from_walk(&walk);
        assert_eq!(height_from_csv(&height_to_csv(&h).unwrap()).unwrap(), h);
    }
}

#[test]
fn empty_and_malformed_files_are_rejected() {
    assert!(matches!(lattice_path_from_csv(""), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(real_path_from_csv(""), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(forest_from_json(""), Err(Error::Parse { .. })));
    match lattice_path_from_csv("index,value\n0,0\n2,1\n") {
        Err(Error::Parse { line, field, .. }) => assert_eq!((line, field.as_str()), (3, "index")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn real_paths_and_contours_round_trip() {
    let walk = LatticePath::new(FIGURE_ONE_WALK.to_vec()).unwrap();
    let contour = contour_from_height(&height_from_walk(&walk));
    let text = contour_to_csv(&contour).unwrap();
    let parsed = real_path_from_csv(&text).unwrap();
    assert_eq!(parsed.len(), 2 * contour.duration() as usize + 1);
    for (i, v) in parsed.values().iter().enumerate() {
        assert_eq!(*v, contour.eval(i as f64 / 2.0));
    }
    let p = RealPath::new(1.0 / 3.0, vec![0.0, 0.1, -2.5, 1e-300]).unwrap();
    assert_eq!(real_path_from_csv(&real_path_to_csv(&p).unwrap()).unwrap().values(), p.values());
}

#[test]
fn distance_matrix_csv_shape() {
    let f = RealPath::new(1.0, vec![0.0, 1.0, 0.0]).unwrap();
    let tree = excursion_metric(&f, &[0.0, 1.0, 2.0]).unwrap();
    assert_eq!(distance_matrix_to_csv(&tree).unwrap(), "t,0,1,2\n0,0,1,0\n1,1,0,1\n2,0,1,0\n");
}

#[test]
fn report_round_trips() {
    let config = ExperimentConfig::new(OffspringLaw::binary(), 2.0, 1.0, vec![100], 20, 3);
    let report = invariance_experiment(&config).unwrap();
    let json = report_to_json(&report).unwrap();
    assert_eq!(report_from_json(&json).unwrap(), report);
    let csv = report_to_csv(&report).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("n,a_n,k_n,s_eff,samples,ks_0.25"));
    let forest: Forest = figure_one().into();
    assert_eq!(forest_from_json(&forest_to_json(&forest).unwrap()).unwrap(), forest);
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a/b");
    let walk = LatticePath::new(FIGURE_ONE_WALK.to_vec()).unwrap();
    write_file(&nested, "walk.csv", &lattice_path_to_csv(&walk).unwrap()).unwrap();
    let text = read_file(&nested.join("walk.csv")).unwrap();
    assert_eq!(lattice_path_from_csv(&text).unwrap(), walk);
    assert!(matches!(read_file(&nested.join("missing.csv")), Err(Error::Io(_))));
}
