//! Fuzzy dominant colors of an image file, or of a generated two-tone image
//! when no path is given.
//!
//! cargo run -p harmonia --example extract_descriptor [-- photo.jpg]

use harmonia::{default_partition, extract_descriptor, open_image, ExtractConfig};
use image::{Rgb, RgbImage};

fn main() -> harmonia::Result<()> {
    let partition = default_partition();
    let image = match std::env::args().nth(1) {
        Some(path) => open_image(path)?,
        None => RgbImage::from_fn(120, 80, |x, _| if x < 80 { Rgb([30, 60, 170]) } else { Rgb([235, 225, 200]) }),
    };
    let started = std::time::Instant::now();
    let descriptor = extract_descriptor(&image, &partition, &ExtractConfig::default())?;
    println!("{}x{} image in {:?}", image.width(), image.height(), started.elapsed());
    for e in descriptor.entries() {
        println!("{:>3} {:<28} {:.3}", e.id, partition.get(e.id).unwrap().name, e.w);
    }
    println!("{}", descriptor.to_json()?);
    Ok(())
}
