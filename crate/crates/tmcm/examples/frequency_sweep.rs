//! Sweep a PEC sphere over frequency, track modes across points, and report
//! resonances with their 3 dB significance bands.

use tmcm::mie::SphereSpec;
use tmcm::modes::{resonance_report, sweep};
use tmcm::synthesis::{Scene, StructureInstance};

fn main() -> tmcm::error::Result<()> {
    // 1 m PEC sphere; ka = 1 sits near 48 MHz
    let scene = Scene::new(
        vec![StructureInstance::sphere(SphereSpec::pec(1.0), [0.0, 0.0, 0.0])],
        1.0,
    )?;
    let result = sweep(&scene, 20e6, 140e6, 25)?;
    println!("swept {} points, {} failures", result.sets.len(), result.failures.len());

    // significance trace of the strongest few tracks
    let mut tracks: Vec<usize> = result.sets[0].modes.iter().map(|m| m.track_id).collect();
    tracks.truncate(4);
    print!("{:>10}", "f (MHz)");
    for id in &tracks {
        print!(" {:>10}", format!("track {id}"));
    }
    println!();
    for set in &result.sets {
        print!("{:>10.2}", set.frequency_hz / 1e6);
        for id in &tracks {
            match set.modes.iter().find(|m| m.track_id == *id) {
                Some(m) => print!(" {:>10.4}", m.t.norm()),
                None => print!(" {:>10}", "-"),
            }
        }
        println!();
    }

    println!("\nresonances (peak |t_n| >= 0.707):");
    for band in resonance_report(&result)? {
        if band.peak_significance < 0.707 {
            continue;
        }
        let edges = match band.band {
            Some((lo, hi)) => format!("{:.2} .. {:.2} MHz", lo / 1e6, hi / 1e6),
            None => "-".into(),
        };
        println!(
            "  track {:>2}: peak {:.4} at {:.2} MHz, band {}{}",
            band.track_id,
            band.peak_significance,
            band.resonance_hz / 1e6,
            edges,
            if band.open_low || band.open_high { " (clipped by sweep range)" } else { "" }
        );
    }
    Ok(())
}
