//! Prints E_max/k for iid and clustered synthetic streams, and detection
//! p-values with and without a periodic overlay. Used to pick the default
//! zone thresholds.
//!
//! cargo run --release -p renewal-core --example calibrate -- [k] [seeds]

use std::time::Instant;

use renewal_core::synth::{gen_cluster, gen_poisson, inject_periodic, ClusterParams, InjectAmount, PeriodicOverlay};
use renewal_core::{analyze, detect_periodic, inter_arrivals, DetectionConfig, EstimationConfig, ZoneThresholds};

fn main() -> renewal_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let k: Option<usize> = args.get(1).and_then(|s| s.parse().ok());
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let m = 100_000;
    let cfg = EstimationConfig { k, ..Default::default() };
    let zones = ZoneThresholds::default();

    let variants = [
        ("mild", ClusterParams { mean_burst_size: 1.5, ..Default::default() }),
        ("default", ClusterParams::default()),
        ("strong", ClusterParams { mean_burst_size: 6.0, ..Default::default() }),
    ];
    for (name, params) in variants {
        for seed in 0..seeds {
            let t0 = Instant::now();
            let cluster = gen_cluster(params, m, seed)?;
            let c = analyze(&inter_arrivals(&cluster)?, &cfg, zones)?;
            let iid = gen_poisson(1.0 / cluster.rate().unwrap(), m, 1000 + seed)?;
            let p = analyze(&inter_arrivals(&iid)?, &cfg, zones)?;
            println!(
                "{name:8} seed {seed}: cluster {:.5} ({}) Δ={} bins={}  iid {:.5} ({}) Δ={}  [{:.1?}]",
                c.result.e_max_norm, c.result.zone, c.pair.bin_width, c.curves.len(),
                p.result.e_max_norm, p.result.zone, p.pair.bin_width, t0.elapsed()
            );
        }
    }

    let det = DetectionConfig::default();
    for seed in 0..seeds {
        let t0 = Instant::now();
        let base = gen_poisson(2.0, m, seed)?;
        let (_, quiet) = detect_periodic(&inter_arrivals(&base)?, &cfg, &det)?;
        let overlay = PeriodicOverlay { period: 100.0, jitter: 0.0, amount: InjectAmount::Fraction(0.05) };
        let merged = inject_periodic(base.times(), overlay, seed)?.stream()?;
        let (_, loud) = detect_periodic(&inter_arrivals(&merged)?, &cfg, &det)?;
        let max_p = |r: &renewal_core::DetectionReport| r.subs.iter().map(|s| s.p).fold(0.0, f64::max);
        let max_chi = |r: &renewal_core::DetectionReport| r.subs.iter().map(|s| s.chi2).fold(0.0, f64::max);
        println!(
            "detect seed {seed}: poisson max p {:.3e} chi2 {:.3}  injected max p {:.3e} chi2 {:.3} (N_bins {}) [{:.1?}]",
            max_p(&quiet), max_chi(&quiet), max_p(&loud), max_chi(&loud), loud.n_bins, t0.elapsed()
        );
    }
    Ok(())
}
