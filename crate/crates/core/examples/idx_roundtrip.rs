//! Writes the synthetic dataset in IDX format and reads it back, the same path
//! MNIST-style files take.

use compdiff::idx::{save_idx_dataset, LabeledDataset};
use compdiff::synthetic::{generate, SyntheticConfig};

fn main() -> compdiff::Result<()> {
    let (_, test) = generate(&SyntheticConfig::default())?;
    let dir = std::env::temp_dir().join("compdiff-idx");
    std::fs::create_dir_all(&dir).map_err(|e| compdiff::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let images = dir.join("test-images.idx");
    let labels = dir.join("test-labels.idx");
    save_idx_dataset(&test, &images, &labels)?;

    let back = LabeledDataset::load_idx(&images, &labels)?;
    println!(
        "{} images of shape {:?}, {} classes",
        back.len(),
        back.images[0].shape(),
        back.classes
    );
    // Pixels are stored as bytes, so values come back on the 1/255 grid.
    let worst = test
        .images
        .iter()
        .zip(&back.images)
        .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
    println!("max pixel change after round trip: {worst:.5}");
    assert_eq!(back.labels, test.labels);
    Ok(())
}
