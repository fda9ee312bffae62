use std::fs;

use ttsnet::io;
use ttsnet_core::dataset::{generate_synthetic, SyntheticConfig};
use ttsnet_core::descriptors::FiringMap;
use ttsnet_core::eval::PredictionRecord;

fn small() -> ttsnet_core::dataset::Corpus {
    let cfg = SyntheticConfig { n_subjects: 2, events_per_subject: 10, trials_per_subject: 2, ..Default::default() };
    generate_synthetic(&cfg, 4).unwrap()
}

#[test]
fn corpus_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small();
    let (ev, ob) = (dir.path().join("events.jsonl"), dir.path().join("objects.csv"));
    io::write_events(&ev, &corpus.events).unwrap();
    io::write_object_sequences(&ob, &corpus.object_sequences).unwrap();
    let back = io::load_corpus(&ev, Some(&ob)).unwrap();
    assert_eq!(back.object_sequences, corpus.object_sequences);
    assert_eq!(back.events.len(), corpus.events.len());
    for (a, b) in back.events.iter().zip(&corpus.events) {
        assert_eq!(a.event_id, b.event_id);
        assert_eq!(a.label(), b.label());
        assert_eq!(a.observation, b.observation);
    }
}

#[test]
fn bad_lines_name_the_line_and_event() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    let good = r#"{"event_id":"a","subject":"s1","label":1,"sample_hz":10,"channels":["x"],"data":[[1.0],[2.0]]}"#;
    let bad = r#"{"event_id":"b7","subject":"s1","label":1,"sample_hz":10,"channels":["x"],"data":[[1.0],"oops"]}"#;
    fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
    let err = io::read_events(&path).unwrap_err().to_string();
    assert!(err.contains("line 2") && err.contains("b7"), "{err}");

    fs::write(&path, "\n\n").unwrap();
    assert!(io::read_events(&path).unwrap_err().to_string().contains("no events"));

    let missing = r#"{"event_id":"c","subject":"s1","label":0,"sample_hz":10,"channels":["x"],"data":[[1.0],[null]]}"#;
    fs::write(&path, missing).unwrap();
    let err = io::read_events(&path).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("row 1"));
}

#[test]
fn object_rows_are_grouped_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.csv");
    fs::write(&path, "trial_id,step,object_id\ns2:t1,2,5\ns1:t1,1,3\ns2:t1,1,4\ns1:t1,2,1\n").unwrap();
    let seqs = io::read_object_sequences(&path).unwrap();
    assert_eq!(seqs.len(), 2);
    assert_eq!((seqs[0].subject_id.as_str(), seqs[0].objects.as_slice()), ("s2", &[4u8, 5][..]));
    assert_eq!((seqs[1].subject_id.as_str(), seqs[1].objects.as_slice()), ("s1", &[3u8, 1][..]));
    fs::write(&path, "trial_id,step,object_id\nx,1,1\nx,1,2\n").unwrap();
    assert!(io::read_object_sequences(&path).is_err());
}

#[test]
fn predictions_and_rasters_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let recs = vec![
        PredictionRecord { event_id: "e1".into(), tau: 0.1, label: 1, pred: 0, score: -0.25 },
        PredictionRecord { event_id: "e1".into(), tau: 0.2, label: 1, pred: 1, score: 1.0 / 3.0 },
    ];
    io::write_predictions(&p, &recs).unwrap();
    assert!(fs::read_to_string(&p).unwrap().starts_with("event_id,tau,label,pred,score\n"));
    assert_eq!(io::read_predictions(&p).unwrap(), recs);

    let r = dir.path().join("r.csv");
    let map = FiringMap::from_firings(250, 100, vec![(3, 7), (1, 2), (200, 99)]).unwrap();
    io::write_raster(&r, &map).unwrap();
    assert!(fs::read_to_string(&r).unwrap().starts_with("neuron,time_ms\n"));
    assert_eq!(io::read_raster(&r, 250, 100).unwrap(), map);
}

#[test]
fn bundles_check_kind_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    io::save_bundle(&path, "hmm", &vec![1.5f64, 2.0]).unwrap();
    assert_eq!(io::bundle_kind(&path).unwrap(), "hmm");
    assert_eq!(io::load_bundle::<Vec<f64>>(&path, "hmm").unwrap(), vec![1.5, 2.0]);
    assert!(io::load_bundle::<Vec<f64>>(&path, "ishii").is_err());
    fs::write(&path, r#"{"version": 99, "kind": "hmm", "model": []}"#).unwrap();
    assert!(io::load_bundle::<Vec<f64>>(&path, "hmm").is_err());
}

#[test]
fn label_files_accept_plain_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("a.txt");
    fs::write(&plain, "1\n0\n\n2\n").unwrap();
    assert_eq!(io::read_labels(&plain).unwrap(), vec![1, 0, 2]);
    let csv = dir.path().join("b.csv");
    fs::write(&csv, "event_id,tau,label,pred,score\ne,1,1,0,-1\n").unwrap();
    assert_eq!(io::read_labels(&csv).unwrap(), vec![0]);
}
