//! Classify a few RGB values against the default fuzzy partition and show
//! every color with nonzero membership.
//!
//! cargo run -p harmonia --example color_space [-- R G B]

use harmonia::{default_partition, rgb_to_hsi};

fn main() {
    let partition = default_partition();
    println!("{} ({} colors)", partition.version(), partition.len());

    let args: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let samples: Vec<[u8; 3]> = match args.as_slice() {
        [r, g, b] => vec![[*r, *g, *b]],
        _ => vec![[255, 0, 0], [200, 120, 40], [90, 90, 200], [128, 128, 128], [250, 250, 250]],
    };
    for [r, g, b] in samples {
        let hsi = rgb_to_hsi(r, g, b);
        println!("\nrgb({r}, {g}, {b}) -> h={:.1} s={:.3} i={:.3}", hsi.h, hsi.s, hsi.i);
        for c in partition.colors() {
            let m = c.membership(hsi);
            if m > 0.0 {
                println!("  {:>3} {:<28} {:.3}", c.id, c.name, m);
            }
        }
        let best = partition.classify(hsi);
        println!("  classified as {} ({})", best, partition.get(best).unwrap().name);
    }
}
