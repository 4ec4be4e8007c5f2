//! Model files on disk: documented layout, round trips and damaged inputs.

use jcas_unfold::unfold::{
    encode_model, load_model, save_model, train, TrainConfig, TrainDims, FORMAT_VERSION, MAGIC,
};
use jcas_unfold::{ChirpVariant, Error, LoadError, UnfoldModel};

fn trained() -> UnfoldModel {
    let dims = TrainDims {
        n: 3,
        k: 2,
        m: 4,
        layers: 2,
        p_t: 1.5,
        chirp: ChirpVariant::Orthogonal,
        delta: 0.5,
    };
    let cfg = TrainConfig {
        steps: 15,
        batch_size: 5,
        seed: 8,
        ..TrainConfig::default()
    };
    train(&cfg, 0.6, dims).unwrap()
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

#[test]
fn header_fields_sit_at_documented_offsets() {
    let m = trained();
    let b = encode_model(&m);
    assert_eq!(&b[..8], MAGIC);
    assert_eq!(u32_at(&b, 8), FORMAT_VERSION);
    assert_eq!((u32_at(&b, 12), u32_at(&b, 16), u32_at(&b, 20)), (3, 2, 2));
    assert_eq!((f64_at(&b, 24), f64_at(&b, 32)), (0.6, 1.5));
    assert_eq!(u64::from_le_bytes(b[40..48].try_into().unwrap()), m.meta.seed);
    assert_eq!(f64_at(&b, 48), 1e-2);
    assert_eq!(f64_at(&b, 88), m.meta.final_loss);
    assert_eq!(u32_at(&b, 96), 2, "slope-matched init code");
    // Payload: layer 0, w1 first.
    assert_eq!(f64_at(&b, 112), m.layers[0].w1[0]);
    assert_eq!(b.len(), 112 + 2 * 8 * 6 * 8);
    // Last value is b4 of the last layer.
    assert_eq!(f64_at(&b, b.len() - 8), *m.layers[1].b4.last().unwrap());
}

#[test]
fn save_and_load_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/dir/model.bin");
    let m = trained();
    save_model(&m, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(std::fs::read(&path).unwrap(), encode_model(&m));
    let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(leftovers.len(), 1, "no temporary files remain");
}

#[test]
fn damaged_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let good = encode_model(&trained());
    type Case = (&'static str, Vec<u8>, fn(&LoadError) -> bool);
    let cases: Vec<Case> = vec![
        ("magic", b"NOTAMODEL-and-more-bytes".to_vec(), |e| {
            matches!(e, LoadError::BadMagic)
        }),
        (
            "version",
            {
                let mut b = good.clone();
                b[8] = 9;
                b
            },
            |e| matches!(e, LoadError::Version { found: 9, .. }),
        ),
        ("short", good[..good.len() - 1].to_vec(), |e| {
            matches!(e, LoadError::Corrupt(_))
        }),
        (
            "long",
            {
                let mut b = good.clone();
                b.push(0);
                b
            },
            |e| matches!(e, LoadError::Corrupt(_)),
        ),
        ("header", good[..50].to_vec(), |e| {
            matches!(e, LoadError::Corrupt(_))
        }),
    ];
    for (name, bytes, expect) in cases {
        let path = dir.path().join(format!("{name}.bin"));
        std::fs::write(&path, bytes).unwrap();
        match load_model(&path) {
            Err(Error::ModelLoad { reason, .. }) => assert!(expect(&reason), "{name}: {reason}"),
            other => panic!("{name}: unexpected {other:?}"),
        }
    }
    assert!(matches!(
        load_model(dir.path().join("absent.bin")),
        Err(Error::Io { .. })
    ));
}
