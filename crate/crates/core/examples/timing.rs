//! Per-channel run time of the network against 8-start, 500-iteration PGD.
//!
//!     cargo run --release --example timing -- [N ...]

use jcas_unfold::harness::sweep::run_timing;
use jcas_unfold::harness::{ExperimentConfig, SolverKind};

fn main() -> jcas_unfold::Result<()> {
    let mut cfg = ExperimentConfig::default();
    let sizes: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    if !sizes.is_empty() {
        cfg.timing.antennas = sizes;
    }
    cfg.dims.m = cfg
        .dims
        .m
        .max(cfg.timing.antennas.iter().copied().max().unwrap_or(0));
    let rows = run_timing(&cfg)?;
    for &n in &cfg.timing.antennas {
        let get = |s| {
            rows.iter()
                .find(|r| r.n == n && r.solver == s)
                .expect("row per solver")
        };
        let (net, pgd) = (get(SolverKind::Unfolded), get(SolverKind::Pgd));
        println!(
            "N = {n:>3}: network {:.3e} s ({} FLOPs), PGD {:.3e} s ({} FLOPs), speedup {:.0}x",
            net.per_channel_seconds,
            net.flops + net.projection_flops,
            pgd.per_channel_seconds,
            pgd.flops,
            pgd.per_channel_seconds / net.per_channel_seconds
        );
    }
    Ok(())
}
