use compdiff::idx::{
    encode_idx_images, encode_idx_labels, load_idx_images, parse_idx_images, parse_idx_labels,
    LabeledDataset,
};
use compdiff::{Error, ParseError, Tensor};

fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out
}

#[test]
fn handmade_image_file_parses() {
    let mut bytes = header(0x0803, &[2, 2, 3]);
    bytes.extend_from_slice(&[0, 51, 102, 153, 204, 255]);
    bytes.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
    let images = parse_idx_images(&bytes).unwrap();
    assert_eq!(images.len(), 2);
    assert_eq!(images[0].shape(), &[1, 2, 3]);
    assert_eq!(images[0].data(), &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    assert_eq!(images[1].data(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn handmade_label_file_parses() {
    let mut bytes = header(0x0801, &[4]);
    bytes.extend_from_slice(&[7, 0, 9, 3]);
    assert_eq!(parse_idx_labels(&bytes).unwrap(), vec![7, 0, 9, 3]);
}

fn parse_error<T: std::fmt::Debug>(r: compdiff::Result<T>) -> ParseError {
    match r {
        Err(Error::Parse(e)) => e,
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn bad_files_are_rejected() {
    let mut swapped = header(0x0801, &[1, 2, 2]);
    swapped.extend_from_slice(&[0; 4]);
    assert!(matches!(
        parse_error(parse_idx_images(&swapped)),
        ParseError::BadMagic { .. }
    ));

    let mut short = header(0x0803, &[3, 2, 2]);
    short.extend_from_slice(&[0; 8]);
    assert!(matches!(
        parse_error(parse_idx_images(&short)),
        ParseError::ShortRead { .. }
    ));

    assert!(parse_idx_labels(&[0, 0, 8]).is_err());

    let mut long = header(0x0801, &[2]);
    long.extend_from_slice(&[1, 2, 3]);
    assert!(parse_idx_labels(&long).is_err());
}

#[test]
fn files_on_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let images: Vec<Tensor> = (0..5)
        .map(|i| Tensor::new(vec![1, 3, 4], (0..12).map(|j| ((i * 12 + j) % 256) as f64 / 255.0).collect()).unwrap())
        .collect();
    let labels = vec![0, 1, 2, 1, 0];
    let ip = dir.path().join("img.idx");
    let lp = dir.path().join("lbl.idx");
    std::fs::write(&ip, encode_idx_images(&images).unwrap()).unwrap();
    std::fs::write(&lp, encode_idx_labels(&labels).unwrap()).unwrap();

    let ds = LabeledDataset::load_idx(&ip, &lp).unwrap();
    assert_eq!(ds.labels, labels);
    assert_eq!(ds.classes, 3);
    for (a, b) in ds.images.iter().zip(&images) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    assert_eq!(load_idx_images(&ip).unwrap().len(), 5);
}

#[test]
fn mismatched_counts_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let images = vec![Tensor::filled(vec![1, 2, 2], 0.5).unwrap(); 3];
    let ip = dir.path().join("img.idx");
    let lp = dir.path().join("lbl.idx");
    std::fs::write(&ip, encode_idx_images(&images).unwrap()).unwrap();
    std::fs::write(&lp, encode_idx_labels(&[0, 1]).unwrap()).unwrap();
    assert!(LabeledDataset::load_idx(&ip, &lp).is_err());
    assert!(LabeledDataset::load_idx(dir.path().join("missing"), &lp).is_err());
}
