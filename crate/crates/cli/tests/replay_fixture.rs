// SPDX-License-Identifier: Apache-2.0

mod common;

use std::path::Path;
use std::sync::Arc;

use rtlsmith::gateway::{ReplayBackend, TRANSCRIPT_FILE};
use rtlsmith::pipeline::{Mode, Pipeline};
use rtlsmith::Workspace;

fn copy_transcripts(from: &Path, root: &Path, to: &Path) {
    for entry in std::fs::read_dir(from).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            copy_transcripts(&path, root, to);
        } else if path.file_name().is_some_and(|n| n == TRANSCRIPT_FILE) {
            let dest = to.join(path.strip_prefix(root).unwrap());
            std::fs::create_dir_all(dest.parent().unwrap()).unwrap();
            std::fs::copy(&path, dest).unwrap();
        }
    }
}

/// Rebuilds fixtures/replay/diamond from the scripted model and the stub
/// checker. Run with `cargo test -- --ignored` after changing prompts.
#[test]
#[ignore]
fn regenerate_diamond_replay() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::stub_config(dir.path());
    let ws = Workspace::open(dir.path(), true).unwrap();
    let pipeline = Pipeline::new(&config, ws, common::diamond_backend(), Arc::new(common::stub_runner())).unwrap();
    let summary = pipeline.run(&[common::design_input("diamond", "diamond_top")], Mode::Decomposed).unwrap();
    assert!(summary[0].top_verified(), "{summary:?}");
    let out = common::fixtures().join("replay/diamond");
    if out.exists() {
        std::fs::remove_dir_all(&out).unwrap();
    }
    copy_transcripts(dir.path(), dir.path(), &out);
}

#[test]
fn diamond_replay_fixture_is_current() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::stub_config(dir.path());
    let backend = Arc::new(ReplayBackend::from_dir(&common::fixtures().join("replay/diamond")).unwrap());
    let ws = Workspace::open(dir.path(), true).unwrap();
    let pipeline = Pipeline::new(&config, ws.clone(), backend, Arc::new(common::stub_runner())).unwrap();
    let summary = pipeline.run(&[common::design_input("diamond", "diamond_top")], Mode::Decomposed).unwrap();
    assert!(summary[0].top_verified(), "{summary:?}");
    let scale_a = ws.task("diamond", "scale_a").unwrap();
    assert_eq!(scale_a.iterations(), 2);
    for t in ["clamp8", "scale_b", "diamond_top"] {
        assert!(ws.task("diamond", t).unwrap().passed_initially(), "{t}");
    }
}
