mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use incde::kg::{
    compute_delta, load_dataset, load_dataset_with, save_dataset, validate_dataset, KgSnapshot, LoadOptions,
    Triple, Violation,
};
use incde::Error;

fn write_time(root: &Path, time: &str, train: &str, valid: &str, test: &str) {
    let dir = root.join(time);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("train.txt"), train).unwrap();
    fs::write(dir.join("valid.txt"), valid).unwrap();
    fs::write(dir.join("test.txt"), test).unwrap();
}

#[test]
fn minimal_dataset() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "a\tr\tb\n", "", "");
    let ds = load_dataset(dir.path()).unwrap();
    let s = ds.stats()[0];
    assert_eq!((s.num_entities, s.num_relations, s.num_triples), (2, 1, 1));
}

#[test]
fn empty_second_snapshot_has_empty_delta() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "a\tr\tb\n", "", "");
    write_time(dir.path(), "2", "", "", "");
    let ds = load_dataset(dir.path()).unwrap();
    let d = ds.delta(2).unwrap();
    assert!(d.is_empty());
    assert_eq!(d.num_new_triples(), 0);
}

#[test]
fn ids_follow_first_appearance() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "x\tp\ty\n", "z\tq\tx\n", "y\tp\tw\n");
    write_time(dir.path(), "2", "v\tq\tx\n", "", "");
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.vocab.entities.names(), ["x", "y", "z", "w", "v"]);
    assert_eq!(ds.vocab.relations.names(), ["p", "q"]);
    assert_eq!(ds.delta(2).unwrap().new_entities, vec![4]);
}

#[test]
fn stats_count_cumulative_vocabulary_and_listed_triples() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "a\tr\tb\nb\tr\tc\n", "a\ts\tc\n", "c\tr\ta\n");
    write_time(dir.path(), "2", "c\tr\td\n", "d\tt\te\n", "");
    let stats = load_dataset(dir.path()).unwrap().stats();
    let rows: Vec<(usize, usize, usize)> = stats.iter().map(|s| (s.num_entities, s.num_relations, s.num_triples)).collect();
    assert_eq!(rows, vec![(3, 2, 4), (5, 3, 2)]);
}

#[test]
fn malformed_line_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "a\tr\tb\nbroken line\n", "", "");
    match load_dataset(dir.path()) {
        Err(Error::Parse { path, line, .. }) => {
            assert!(path.ends_with("1/train.txt"));
            assert_eq!(line, 2);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn duplicates_within_a_delta() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "a\tr\tb\n", "a\tr\tb\n", "");
    assert!(matches!(load_dataset(dir.path()), Err(Error::Validation(_))));
    let ds = load_dataset_with(
        dir.path(),
        &LoadOptions {
            dedupe_within_delta: true,
            ..LoadOptions::default()
        },
    )
    .unwrap();
    assert_eq!(ds.delta(1).unwrap().num_new_triples(), 1);
}

#[test]
fn repeated_triples_belong_to_first_time() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "a\tr\tb\n", "", "");
    write_time(dir.path(), "2", "a\tr\tb\nb\tr\tc\n", "", "");
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.delta(2).unwrap().train.len(), 1);
    assert_eq!(ds.stats()[1].num_triples, 2);
}

#[test]
fn sidecars_are_written_and_respected() {
    let dir = tempfile::tempdir().unwrap();
    write_time(dir.path(), "1", "a\tr\tb\n", "", "");
    let options = LoadOptions {
        write_vocab_sidecars: true,
        ..LoadOptions::default()
    };
    let first = load_dataset_with(dir.path(), &options).unwrap();
    let text = fs::read_to_string(dir.path().join("entity2id.txt")).unwrap();
    assert_eq!(text, "a\t0\nb\t1\n");
    fs::write(dir.path().join("entity2id.txt"), "b\t0\na\t1\n").unwrap();
    let second = load_dataset(dir.path()).unwrap();
    assert_eq!(second.vocab.entities.id("b"), Some(0));
    assert_ne!(first.vocab.entities.id("b"), second.vocab.entities.id("b"));
}

#[test]
fn save_and_reload_round_trip() {
    let ds = common::toy_dataset(1, 60, 5, 300, 3);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.vocab.entities.names(), ds.vocab.entities.names());
    assert_eq!(back.vocab.relations.names(), ds.vocab.relations.names());
    for (a, b) in ds.snapshots.iter().zip(&back.snapshots) {
        assert_eq!((&a.train, &a.valid, &a.test), (&b.train, &b.valid, &b.test));
        assert_eq!(a.cumulative, b.cumulative);
    }
    assert!(validate_dataset(&back).is_empty());
}

#[test]
fn growth_and_union_invariants() {
    let ds = common::toy_dataset(2, 80, 6, 400, 5);
    for w in ds.snapshots.windows(2) {
        assert!(w[0].entities.is_subset(&w[1].entities));
        assert!(w[0].relations.is_subset(&w[1].relations));
    }
    let union: HashSet<Triple> = ds.deltas.iter().flat_map(|d| d.new_triples().copied()).collect();
    assert_eq!(&union, &ds.snapshots.last().unwrap().cumulative);
    for (i, d) in ds.deltas.iter().enumerate() {
        let mut rebuilt = if i == 0 { HashSet::new() } else { ds.snapshots[i - 1].cumulative.clone() };
        rebuilt.extend(d.new_triples().copied());
        assert_eq!(rebuilt, ds.snapshots[i].cumulative);
    }
}

#[test]
fn delta_examples() {
    let (a, b, c, r) = (0, 1, 2, 0);
    let first = KgSnapshot::extend(None, 1, vec![Triple::new(a, r, b)], vec![], vec![]);
    let d1 = compute_delta(&first, None).unwrap();
    assert_eq!((d1.new_entities.clone(), d1.new_relations.clone(), d1.train.clone()), (vec![a, b], vec![r], vec![Triple::new(a, r, b)]));
    let second = KgSnapshot::extend(Some(&first), 2, vec![Triple::new(b, r, c)], vec![], vec![]);
    let d2 = compute_delta(&second, Some(&first)).unwrap();
    assert_eq!((d2.new_entities, d2.new_relations, d2.train), (vec![c], vec![], vec![Triple::new(b, r, c)]));
    assert!(compute_delta(&first, Some(&first)).unwrap().is_empty());
    let third = KgSnapshot::extend(Some(&second), 3, vec![], vec![], vec![]);
    assert!(matches!(compute_delta(&third, Some(&first)), Err(Error::OutOfOrder { .. })));
    assert!(matches!(compute_delta(&first, Some(&second)), Err(Error::OutOfOrder { .. })));
}

#[test]
fn validation_lists_constructed_violations() {
    let mut ds = common::toy_dataset(3, 60, 5, 300, 3);
    assert!(validate_dataset(&ds).is_empty());
    let gone = *ds.snapshots[0].entities.iter().next().unwrap();
    ds.snapshots[1].entities.remove(&gone);
    let report = validate_dataset(&ds);
    assert!(report.violations.iter().any(|v| matches!(v, Violation::MissingEntity { time: 2, .. })));

    let mut ds = common::toy_dataset(3, 60, 5, 300, 3);
    let bad = Triple::new(0, 999, 1);
    ds.snapshots[0].train.push(bad);
    let report = validate_dataset(&ds);
    assert!(report.violations.iter().any(|v| matches!(v, Violation::DanglingRelation { time: 1, .. })));
}
