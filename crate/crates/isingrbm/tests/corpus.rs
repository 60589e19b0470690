use std::fs;

use isingrbm::corpus::{generate_corpus, load_corpus, GenerateRequest, OracleOptions};
use isingrbm::format::{format_instance, parse_instance, read_ground_truth, read_instance, sidecar_path};
use isingrbm::parallel::Pool;
use isingrbm::report::RunManifest;
use isingrbm::Error;
use isingrbm_core::{InstanceSpec, ProblemKind};

fn request(kind: ProblemKind, sizes: Vec<usize>, per_size: u32, out: &std::path::Path) -> GenerateRequest {
    GenerateRequest {
        kind,
        sizes,
        per_size,
        density: 0.5,
        seed: 31,
        out_dir: out.to_path_buf(),
        oracle: OracleOptions {
            exhaustive_cap: 20,
            sa_sweeps: 300,
            sa_restarts: 2,
            rbm_chains: 1,
            rbm_samples: 2000,
            seed: 0,
        },
    }
}

fn manifest() -> RunManifest {
    RunManifest::new("generate", 31, vec![], &()).unwrap()
}

#[test]
fn paper_scale_instances_round_trip_exactly() {
    for kind in [ProblemKind::MaxCut, ProblemKind::Sk] {
        for n in (10..=200).step_by(10) {
            for index in 0..10 {
                let p = InstanceSpec::in_corpus(kind, n, index, 5, 0.5).generate().unwrap();
                let text = format_instance(&p);
                assert_eq!(parse_instance(&text, "mem").unwrap(), p);
                assert_eq!(format_instance(&parse_instance(&text, "mem").unwrap()), text);
            }
        }
    }
}

#[test]
fn generated_corpus_reloads_with_unchanged_energies() {
    let tmp = tempfile::tempdir().unwrap();
    let sizes: Vec<usize> = (10..=200).step_by(10).collect();
    let req = request(ProblemKind::MaxCut, sizes, 2, tmp.path());
    let written = generate_corpus(&req, manifest(), &Pool::new(2).unwrap()).unwrap();
    let entries = load_corpus(tmp.path()).unwrap();
    assert_eq!(entries.len(), 40);
    for (e, r) in entries.iter().zip(&written.instances) {
        assert_eq!(e.id, r.id);
        assert_eq!(e.ground_truth.best_energy, r.best_energy);
        assert_eq!(e.ground_truth.best_cut, r.best_cut);
        assert_eq!(e.problem.energy(&e.ground_truth.witness).unwrap(), r.best_energy);
        assert_eq!(e.problem.cut_value(&e.ground_truth.witness).ok(), r.best_cut);
        let fresh = InstanceSpec::in_corpus(ProblemKind::MaxCut, r.n, r.index, 31, 0.5).generate().unwrap();
        assert_eq!(fresh, e.problem);
    }
}

#[test]
fn twenty_spin_sidecar_is_the_exhaustive_optimum() {
    let tmp = tempfile::tempdir().unwrap();
    let mut req = request(ProblemKind::MaxCut, vec![20], 1, tmp.path());
    req.oracle.exhaustive_cap = 24;
    generate_corpus(&req, manifest(), &Pool::new(1).unwrap()).unwrap();
    let path = tmp.path().join("maxcut-n020-00.ising");
    let p = read_instance(&path).unwrap();
    let gt = read_ground_truth(&sidecar_path(&path), &p).unwrap();
    let edges: Vec<(usize, usize)> = p.edges().map(|(i, j, _)| (i, j)).collect();
    let best = (0u32..1 << 19)
        .map(|mask| edges.iter().filter(|&&(i, j)| (mask >> i & 1) != (mask >> j & 1)).count() as u64)
        .max()
        .unwrap();
    assert_eq!(gt.best_cut, Some(best));
}

#[test]
fn worker_count_does_not_change_the_corpus() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sizes = vec![10, 22, 30];
    let ra = generate_corpus(&request(ProblemKind::Sk, sizes.clone(), 3, a.path()), manifest(), &Pool::new(1).unwrap()).unwrap();
    let rb = generate_corpus(&request(ProblemKind::Sk, sizes, 3, b.path()), manifest(), &Pool::new(4).unwrap()).unwrap();
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
    for r in &ra.instances {
        for name in [r.file.clone(), format!("{}.gt", r.file)] {
            assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        }
    }
}

#[test]
fn missing_and_empty_corpora_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(load_corpus(tmp.path()), Err(Error::EmptyCorpus(_))));
    generate_corpus(&request(ProblemKind::MaxCut, vec![8], 3, tmp.path()), manifest(), &Pool::new(1).unwrap()).unwrap();
    fs::remove_file(tmp.path().join("maxcut-n008-01.ising.gt")).unwrap();
    match load_corpus(tmp.path()) {
        Err(Error::MissingGroundTruth(list)) => {
            assert_eq!(list.len(), 1);
            assert!(list[0].ends_with("maxcut-n008-01.ising"));
        }
        other => panic!("{other:?}"),
    }
}
