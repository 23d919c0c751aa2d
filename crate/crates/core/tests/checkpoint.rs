//! Checkpoint and ensemble persistence.

mod support;

use std::fs;

use pdfcnn::models::{ArchSpec, ArchitectureId, ModelCheckpoint, ModelError, Network, TrainingMetadata, CHECKPOINT_MAGIC};
use pdfcnn::training::{score_samples, train_ensemble, Ensemble, TrainConfig};
use support::corpus::split_corpus;

const LEN: usize = 256;

fn untrained(arch: ArchitectureId, seed: u64) -> ModelCheckpoint {
    let net = Network::build(ArchSpec::miniature(arch), seed).unwrap();
    ModelCheckpoint::from_network(&net, TrainingMetadata::untrained(seed))
}

#[test]
fn trained_ensembles_round_trip_bit_exactly() {
    let corpus = split_corpus(80, 40, 3, LEN);
    for arch in [ArchitectureId::A, ArchitectureId::B, ArchitectureId::C] {
        let config = TrainConfig {
            epochs: 1,
            batch_size: 16,
            seed: 12,
            ..TrainConfig::new(ArchSpec::desk(arch, LEN))
        };
        let (ens, logs) = train_ensemble(&config, 2, &corpus.train, &corpus.val).unwrap();
        assert_eq!(logs.len(), 2);

        let dir = tempfile::tempdir().unwrap();
        let descriptor = ens.save(dir.path()).unwrap();
        let from_dir = Ensemble::load(dir.path()).unwrap();
        let from_descriptor = Ensemble::load(&descriptor).unwrap();
        assert_eq!(from_dir.members(), ens.members());
        assert_eq!(from_descriptor.members(), ens.members());

        let member = dir.path().join("member_01.ckpt");
        let single = Ensemble::load(&member).unwrap();
        assert_eq!(single.members(), &ens.members()[1..]);
        let bytes = fs::read(&member).unwrap();
        assert!(bytes.starts_with(CHECKPOINT_MAGIC));
        assert_eq!(ModelCheckpoint::from_bytes(&bytes).unwrap().to_bytes().unwrap(), bytes);

        let before = score_samples(&ens.scorer().unwrap(), &corpus.test).unwrap();
        let after = score_samples(&from_dir.scorer().unwrap(), &corpus.test).unwrap();
        assert_eq!(before, after, "{arch:?}");
    }
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let ckpt = untrained(ArchitectureId::B, 4);
    let bytes = ckpt.to_bytes().unwrap();

    let mut bad_magic = bytes.clone();
    bad_magic[0] ^= 0xFF;
    assert!(matches!(ModelCheckpoint::from_bytes(&bad_magic), Err(ModelError::Corrupt(_))));

    let truncated = &bytes[..bytes.len() - 4];
    assert!(ModelCheckpoint::from_bytes(truncated).is_err());

    let mut padded = bytes.clone();
    padded.extend_from_slice(&[0, 0, 0, 0]);
    assert!(ModelCheckpoint::from_bytes(&padded).is_err());

    assert!(ModelCheckpoint::from_bytes(&[]).is_err());
}

#[test]
fn descriptor_arch_must_match_members() {
    let dir = tempfile::tempdir().unwrap();
    let ens = Ensemble::new(vec![untrained(ArchitectureId::A, 1)]).unwrap();
    let descriptor = ens.save(dir.path()).unwrap();
    let text = fs::read_to_string(&descriptor).unwrap().replace("\"A\"", "\"C\"");
    fs::write(&descriptor, text).unwrap();
    assert!(matches!(Ensemble::load(dir.path()), Err(ModelError::ArchMismatch { .. })));
}
