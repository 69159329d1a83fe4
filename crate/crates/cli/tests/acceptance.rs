//! End-to-end acceptance checks, one line per criterion.
//!
//! Hard criteria fail the run. Criterion 9 is soft on machines with fewer
//! than four cores and criterion 12 only warns outside its bands.

use std::process::ExitCode;
use std::time::Instant;

use bbsi_cli::commands::{scale, Axis};
use bbsi_cli::run::{run_record, ProblemSpec, SolverConfig, SolverKind};
use bbsi_core::banded::max_block_error;
use bbsi_core::cost::{autotune, cost_fused, cost_nrgf, cost_rgf};
use bbsi_core::ddrgf::{
    cross_subdomain_couplings, ddrgf, ddrgf_level_parts, schur_coupling_pattern, DomainPlan,
};
use bbsi_core::kernels::{
    benchmark_kernels, default_samples, ridge_intensity, roofline, KernelRatios,
};
use bbsi_core::rgf::{rgf_extended, rgf_fused, rgf_ndiag, rgf_ndiag_traced, rgf_tridiag};
use bbsi_core::{
    make_layout, oracle_selected_inverse, random_spd_like, BlockBandedMatrix, Kernels,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Kind, fn() -> Outcome);

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Hard,
    Soft,
    Report,
}

/// SplitMix64, for reproducible instance parameters.
struct Mix(u64);

impl Mix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[self.below(xs.len())]
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn problem(l: usize, bs: usize, w: usize, seed: u64) -> BlockBandedMatrix {
    random_spd_like(&make_layout(l, bs, w).unwrap(), seed, 2.0).unwrap()
}

fn err(x: &BlockBandedMatrix, r: &BlockBandedMatrix) -> f64 {
    max_block_error(x, r).unwrap().error
}

fn oracle_equivalence() -> Outcome {
    let mut rng = Mix(1);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let l = 1 + rng.below(12);
        let bs = rng.pick(&[1, 2, 4, 8]);
        let w = (1 + rng.below(3)).min(l - 1);
        let m = problem(l, bs, w, i);
        let want = oracle_selected_inverse(&m).unwrap();
        let mut errs = vec![
            err(&rgf_ndiag(&m).unwrap().0, &want),
            err(&rgf_fused(&m).unwrap().0, &want),
        ];
        if w <= 1 {
            errs.push(err(&rgf_tridiag(&m).unwrap().0, &want));
        }
        for e in errs {
            if e.is_nan() || e > 1e-10 {
                return Err(format!(
                    "instance {i} (l={l}, b_s={bs}, w={w}) error {e:.3e} > 1e-10"
                ));
            }
            worst = worst.max(e);
        }
    }
    Ok(format!(
        "200 instances, worst block error {worst:.2e} (bound 1e-10)"
    ))
}

fn ddrgf_equals_rgf() -> Outcome {
    let mut rng = Mix(2);
    let (mut worst, mut spread): (f64, f64) = (0.0, 0.0);
    let mut levels_seen = [false; 3];
    for i in 0..60 {
        let l = 6 + rng.below(35);
        let bs = rng.pick(&[2, 4, 8]);
        let mut s2: Vec<usize> = (0..1 + rng.below(3)).map(|_| 1 + rng.below(4)).collect();
        while DomainPlan::new(&s2, 1).validate(l).is_err() {
            s2.pop();
        }
        levels_seen[s2.len() - 1] = true;
        let m = problem(l, bs, 1, 1000 + i);
        let (r, _) = rgf_tridiag(&m).unwrap();
        let outs: Vec<BlockBandedMatrix> = [1, 2, 4]
            .iter()
            .map(|&t| ddrgf(&m, &DomainPlan::new(&s2, t)).unwrap().0)
            .collect();
        for (o, t) in outs.iter().zip([1, 2, 4]) {
            let e = err(o, &r);
            if e.is_nan() || e > 1e-10 {
                return Err(format!(
                    "instance {i} l={l} plan {s2:?} threads {t}: error {e:.3e} > 1e-10"
                ));
            }
            worst = worst.max(e);
            let d = err(o, &outs[0]);
            if d.is_nan() || d > 1e-12 {
                return Err(format!(
                    "instance {i} l={l} plan {s2:?}: threads {t} differ by {d:.3e} > 1e-12"
                ));
            }
            spread = spread.max(d);
        }
    }
    if levels_seen != [true; 3] {
        return Err(format!(
            "plans did not cover 1 to 3 levels: {levels_seen:?}"
        ));
    }
    Ok(format!(
        "60 instances x threads 1/2/4, worst vs RGF {worst:.2e}, thread spread {spread:.2e}"
    ))
}

fn counter_exactness() -> Outcome {
    let mut checked = 0;
    for l in 1..=12u64 {
        let (_, c) = rgf_tridiag(&problem(l as usize, 1, usize::from(l > 1), l)).unwrap();
        if (c.n_lu, c.n_getrs, c.n_gemm) != (l, 3 * l - 2, 4 * (l - 1)) {
            return Err(format!("RGF l={l}: got {c}"));
        }
        checked += 1;
    }
    for w in 1..=3u64 {
        for l in w + 1..=12 {
            let (_, c) = rgf_ndiag(&problem(l as usize, 1, w as usize, l * 7 + w)).unwrap();
            let want = (
                l,
                l * (2 * w + 1) - w * w - w,
                (3 * w * w + w) * l - 2 * w * w * w - 2 * w * w,
            );
            if (c.n_lu, c.n_getrs, c.n_gemm) != want {
                return Err(format!("nRGF l={l} w={w}: got {c}, want {want:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (l, w) cases, exact integer equality"))
}

fn cost_reduction() -> Outcome {
    let mut rng = Mix(4);
    for _ in 0..50 {
        let l = 1 + rng.below(2000);
        let r = KernelRatios::from_ratios(0.05 + 2.0 * rng.unit(), 0.5 + 2.0 * rng.unit());
        let (a, b) = (cost_nrgf(l, 1, &r), cost_rgf(l, &r));
        if a.gemm_equivalents != b.gemm_equivalents {
            return Err(format!(
                "l={l}: {} != {}",
                a.gemm_equivalents, b.gemm_equivalents
            ));
        }
    }
    Ok("50 random (l, ratios) pairs, bit-identical".into())
}

fn extended_extra() -> Outcome {
    let got: Vec<u64> = (1..=4)
        .map(|l| {
            rgf_extended(&problem(l, 2, usize::from(l > 1), l as u64))
                .unwrap()
                .0
                .extra
                .n_gemm
        })
        .collect();
    if got == [0, 0, 2, 6] {
        Ok(format!("extra GEMMs for l=1..4: {got:?}"))
    } else {
        Err(format!(
            "extra GEMMs for l=1..4: {got:?}, want [0, 0, 2, 6]"
        ))
    }
}

fn slope_check(
    axis: Axis,
    grid: &[usize],
    base: ProblemSpec,
    reps: usize,
    lo: f64,
    hi: f64,
) -> Outcome {
    let (records, slope) = scale(
        axis,
        grid,
        &base,
        &SolverConfig::new(SolverKind::Rgf, 1),
        reps,
        None,
    )
    .unwrap();
    let slope = slope.ok_or("no slope")?;
    let times: Vec<String> = records
        .iter()
        .map(|r| format!("{:.1}", r.wall_time_ms))
        .collect();
    let msg = format!(
        "slope {slope:.3} in [{lo}, {hi}], times ms {}",
        times.join("/")
    );
    if (lo..=hi).contains(&slope) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn scaling_in_layers() -> Outcome {
    let base = ProblemSpec {
        layers: 0,
        block_size: 64,
        bandwidth: 1,
        seed: 6,
        dominance: 2.0,
    };
    slope_check(Axis::Layers, &[20, 40, 80, 160], base, 10, 0.9, 1.1)
}

fn scaling_in_block_size() -> Outcome {
    let base = ProblemSpec {
        layers: 20,
        block_size: 0,
        bandwidth: 1,
        seed: 7,
        dominance: 2.0,
    };
    slope_check(Axis::Blocksize, &[64, 128, 256, 512], base, 3, 2.2, 3.3)
}

fn native_vs_fused() -> Outcome {
    let mut notes = Vec::new();
    let r128 = benchmark_kernels(128, 20).unwrap();
    for w in [2, 3] {
        let m = problem(40, 128, w, 8 + w as u64);
        let native = run_record(&m, &SolverConfig::new(SolverKind::Nrgf, 1), 3, 0, None)
            .unwrap()
            .wall_time_ms;
        let fused = run_record(&m, &SolverConfig::new(SolverKind::Fused, 1), 3, 0, None)
            .unwrap()
            .wall_time_ms;
        let rw = benchmark_kernels(128 * w, 10).unwrap();
        let pred_native = cost_nrgf(40, w, &r128).predicted_seconds;
        let pred_fused = cost_fused(40, w, &rw).predicted_seconds;
        let line = format!(
            "w={w}: native {native:.1} ms vs fused {fused:.1} ms, model {:.1} vs {:.1} ms",
            pred_native * 1e3,
            pred_fused * 1e3
        );
        if !(native <= fused && pred_native <= pred_fused) {
            return Err(line);
        }
        notes.push(line);
    }
    Ok(notes.join("; "))
}

fn time_ms(f: impl Fn(), reps: usize) -> f64 {
    f();
    let t = Instant::now();
    for _ in 0..reps {
        f();
    }
    t.elapsed().as_secs_f64() * 1e3 / reps as f64
}

fn concurrency() -> Outcome {
    let (l, bs) = (240, 64);
    let ratios = benchmark_kernels(bs, 100).unwrap();
    let tuned = autotune(l, bs, 4, &ratios);
    let plan = tuned
        .plan()
        .cloned()
        .unwrap_or_else(|| DomainPlan::new(&[1], 4));
    let m = problem(l, bs, 1, 9);
    let p4 = plan.clone();
    let p1 = DomainPlan {
        n_threads: 1,
        terminal_threads: 1,
        ..plan.clone()
    };
    let t4 = time_ms(|| drop(ddrgf(&m, &p4).unwrap()), 3);
    let t1 = time_ms(|| drop(ddrgf(&m, &p1).unwrap()), 3);
    let rgf = time_ms(|| drop(rgf_tridiag(&m).unwrap()), 3);
    let speedup = t1 / t4;
    let msg = format!(
        "l={l} b_s={bs} plan {}: DDRGF 1 thread {t1:.1} ms, 4 threads {t4:.1} ms (x{speedup:.2}, need >= 1.8), RGF {rgf:.1} ms",
        plan
    );
    if speedup >= 1.8 && t1 >= rgf {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn structural() -> Outcome {
    let mut rng = Mix(10);
    let mut runs = 0;
    for i in 0..50 {
        let l = 2 + rng.below(14);
        let w = (1 + rng.below(3)).min(l - 1);
        let (_, _, trace) = rgf_ndiag_traced(&problem(l, 2, w, 2000 + i)).unwrap();
        if trace.schur_bandwidth() > w {
            return Err(format!(
                "l={l} w={w}: Schur update reached bandwidth {}",
                trace.schur_bandwidth()
            ));
        }
        runs += 1;
    }
    for i in 0..50 {
        let s2 = 1 + rng.below(4);
        let l = s2 + 1 + rng.below(30);
        let m = problem(l, 2, 1, 3000 + i);
        let lp = ddrgf_level_parts(&m, s2, &mut Kernels::sequential()).unwrap();
        let off = schur_coupling_pattern(&lp.results)
            .into_iter()
            .find(|(a, b)| a.abs_diff(*b) > 1);
        if lp.schur.bandwidth() > 1
            || off.is_some()
            || !cross_subdomain_couplings(&lp.parts).is_empty()
        {
            return Err(format!(
                "l={l} s2={s2}: Schur complement not block tridiagonal ({off:?})"
            ));
        }
        runs += 1;
    }
    Ok(format!("{runs} instrumented runs, zero violations"))
}

fn roofline_arithmetic() -> Outcome {
    let p = roofline(1024, 86.4, 21.32, 1.0).unwrap();
    let ridge = ridge_intensity(86.4, 21.32);
    let msg = format!(
        "a = {:.4} FLOP/B, attainable {:.2} GFLOP/s, ridge {ridge:.4}",
        p.intensity, p.attainable
    );
    if (p.intensity - 127.75).abs() < 5e-3
        && (p.attainable - 86.4).abs() < 5e-3
        && (ridge - 4.05).abs() <= 0.01
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn microbenchmark() -> Outcome {
    let r = benchmark_kernels(1024, default_samples(1024)).unwrap();
    let msg = format!(
        "N=1024 ({} samples): r_lu {:.3} in [0.30, 0.70], r_getrs {:.3} in [0.85, 1.60]",
        r.sample_count, r.r_lu, r.r_getrs
    );
    if (0.30..=0.70).contains(&r.r_lu) && (0.85..=1.60).contains(&r.r_getrs) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let nine = if cores < 4 { Kind::Soft } else { Kind::Hard };
    let criteria: [Criterion; 12] = [
        ("oracle equivalence", Kind::Hard, oracle_equivalence),
        ("DDRGF equals RGF", Kind::Hard, ddrgf_equals_rgf),
        ("kernel counter exactness", Kind::Hard, counter_exactness),
        ("cost model reduction", Kind::Hard, cost_reduction),
        ("extended-inverse extra GEMMs", Kind::Hard, extended_extra),
        ("scaling in layers", Kind::Hard, scaling_in_layers),
        ("scaling in block size", Kind::Hard, scaling_in_block_size),
        ("native vs fused", Kind::Hard, native_vs_fused),
        ("concurrency to complexity", nine, concurrency),
        ("structural checks", Kind::Hard, structural),
        ("roofline arithmetic", Kind::Hard, roofline_arithmetic),
        ("microbenchmark sanity", Kind::Report, microbenchmark),
    ];
    let mut hard_failures = 0;
    for (i, (name, kind, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match (&outcome, kind) {
            (Ok(d), _) => ("PASS", d),
            (Err(d), Kind::Hard) => {
                hard_failures += 1;
                ("FAIL", d)
            }
            (Err(d), Kind::Soft) => ("FLAG", d),
            (Err(d), Kind::Report) => ("WARN", d),
        };
        println!("[{tag}] {:>2}. {name}: {detail} ({secs:.1}s)", i + 1);
    }
    if cores < 4 {
        println!("note: {cores} core(s) available; criterion 9 is reported, not enforced");
    }
    if hard_failures > 0 {
        println!("{hard_failures} hard criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
