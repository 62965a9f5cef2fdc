//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use vqsplit::codec::{compress_image, IndexMap};
use vqsplit::metrics::{mse, psnr, rates_for, shannon_entropy};
use vqsplit::persistence::{load_codebook, load_index_file, save_codebook, save_index_file};
use vqsplit::pixelgrid::{image_to_blocks, load_pgm, BlockVector, GrayImage};
use vqsplit::quantizer::{
    assign_members, double_codebook, init_codebook, recalc_centroids, train_codebook, Codebook,
    Mutator, TrainerConfig,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn read_image(name: &str) -> GrayImage {
    load_pgm(&fs::read(data(name)).expect("fixture")).expect("fixture parses")
}

/// Random training vectors: either continuous values or a few repeated
/// integer levels, so empty cells and ties both show up.
fn random_vectors(rng: &mut StdRng, n: usize) -> Vec<BlockVector> {
    let coarse = rng.random_bool(0.4);
    (0..n)
        .map(|_| {
            BlockVector(std::array::from_fn(|_| {
                if coarse {
                    f64::from(rng.random_range(0..4u8)) * 60.0
                } else {
                    rng.random_range(0.0..=255.0)
                }
            }))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let a = psnr(165.0547).map_err(|e| e.to_string())?;
    let b = psnr(164.5081).map_err(|e| e.to_string())?;
    ensure!((a - 25.9545).abs() <= 0.005, "psnr(165.0547) = {a}");
    ensure!((b - 25.9689).abs() <= 0.005, "psnr(164.5081) = {b}");
    Ok(format!(
        "psnr(165.0547) = {a:.4} dB, psnr(164.5081) = {b:.4} dB"
    ))
}

fn criterion_2() -> Outcome {
    let train = read_image("cameraman_100.pgm");
    let test = read_image("cameraman_200.pgm");
    ensure!(
        (train.width(), train.height()) == (100, 100),
        "training image is not 100x100"
    );
    ensure!(
        (test.width(), test.height()) == (200, 200),
        "test image is not 200x200"
    );

    let start = Instant::now();
    let vectors = image_to_blocks(&train);
    ensure!(
        vectors.len() == 2500,
        "{} training vectors, expected 2500",
        vectors.len()
    );
    let (codebook, report) =
        train_codebook(&vectors, &TrainerConfig::new(64)).map_err(|e| e.to_string())?;
    ensure!(
        codebook.len() == 64,
        "codebook has {} entries",
        codebook.len()
    );
    let train_s = report.elapsed.as_secs_f64();

    let t = Instant::now();
    let map = compress_image(&test, &codebook).map_err(|e| e.to_string())?;
    let compress_s = t.elapsed().as_secs_f64();
    let total = start.elapsed().as_secs_f64();
    ensure!(
        map.indices().len() == 10_000,
        "{} indices, expected 10000",
        map.indices().len()
    );
    ensure!(map.indices().iter().all(|&i| i < 64), "index out of range");
    ensure!(total < 5.0, "took {total:.3} s");
    Ok(format!(
        "2500 vectors, 10000 indices; train {train_s:.3} s + quantize {compress_s:.3} s (total {total:.3} s < 5 s)"
    ))
}

fn run_roundtrip(out_dir: &Path, extra: &[&str]) -> Result<std::process::Output, String> {
    let mut args = vec![
        "roundtrip".to_string(),
        "--train".into(),
        data("cameraman_100.pgm").display().to_string(),
        "--test".into(),
        data("cameraman_200.pgm").display().to_string(),
        "--size".into(),
        "64".into(),
        "--out-dir".into(),
        out_dir.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let out = Command::new(env!("CARGO_BIN_EXE_vqsplit"))
        .args(&args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out)
}

fn criterion_3() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = run_roundtrip(dir.path(), &["--refine-iters", "4", "--report", "json"])?;
    let json: serde_json::Value =
        serde_json::from_slice(&out.stdout).map_err(|e| format!("report is not JSON: {e}"))?;
    let psnr_db = json["psnr_db"]
        .as_f64()
        .ok_or("psnr_db missing or not finite")?;
    let entropy = json["entropy_bits"]
        .as_f64()
        .ok_or("entropy_bits missing")?;
    ensure!(psnr_db >= 24.0, "psnr_db = {psnr_db}");
    ensure!((3.0..=6.0).contains(&entropy), "entropy_bits = {entropy}");
    Ok(format!(
        "cameraman M=64 refine 4: psnr_db = {psnr_db:.4}, entropy_bits = {entropy:.4}"
    ))
}

fn criterion_4_and_5() -> (Outcome, Outcome) {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    let mut cycles = 0usize;
    let mut doublings = 0usize;
    let mut lloyd_failure = None;
    let mut doubling_failure = None;
    let instances = 150;
    for instance in 0..instances {
        let n = rng.random_range(1..=64);
        let m = [2usize, 4, 8][instance % 3];
        let vectors = random_vectors(&mut rng, n);
        let mut mutator = Mutator::new(rng.random(), rng.random_range(0.5..8.0));
        let mut codebook = init_codebook(&vectors).unwrap();
        while codebook.len() < m {
            let (_, before) = assign_members(&vectors, &codebook);
            let doubled = double_codebook(&codebook, &mut mutator);
            let (_, after) = assign_members(&vectors, &doubled);
            doublings += 1;
            if after > before && doubling_failure.is_none() {
                doubling_failure = Some(format!("instance {instance}: {after} > {before}"));
            }
            codebook = doubled;
            for _ in 0..3 {
                let (membership, first) = assign_members(&vectors, &codebook);
                codebook = recalc_centroids(&vectors, &membership, &codebook, &mut mutator);
                let (_, second) = assign_members(&vectors, &codebook);
                cycles += 1;
                if second > first * (1.0 + 1e-9) && lloyd_failure.is_none() {
                    lloyd_failure = Some(format!("instance {instance}: {second} > {first}"));
                }
            }
        }
    }
    let lloyd = match lloyd_failure {
        Some(f) => Err(f),
        None => Ok(format!("{instances} instances, {cycles} assign/migrate/assign cycles non-increasing (rel 1e-9)")),
    };
    let doubling = match doubling_failure {
        Some(f) => Err(f),
        None => Ok(format!(
            "{instances} instances, {doublings} doublings never raised distortion (exact)"
        )),
    };
    (lloyd, doubling)
}

/// Optimal 2-means distortion per component by enumerating every split of
/// the vectors into two groups.
fn brute_force_two_means(vectors: &[BlockVector]) -> f64 {
    let n = vectors.len();
    let sse = |members: &[&BlockVector]| -> f64 {
        if members.is_empty() {
            return 0.0;
        }
        let mut mean = [0.0; 4];
        for v in members {
            for (m, x) in mean.iter_mut().zip(v.0) {
                *m += x;
            }
        }
        let count = members.len() as f64;
        members
            .iter()
            .map(|v| {
                (0..4)
                    .map(|k| (v.0[k] - mean[k] / count).powi(2))
                    .sum::<f64>()
            })
            .sum()
    };
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let (a, b): (Vec<_>, Vec<_>) = vectors
            .iter()
            .enumerate()
            .partition(|(i, _)| mask >> i & 1 == 1);
        let a: Vec<_> = a.into_iter().map(|(_, v)| v).collect();
        let b: Vec<_> = b.into_iter().map(|(_, v)| v).collect();
        best = best.min(sse(&a) + sse(&b));
    }
    best / (4 * n) as f64
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let instances = 60;
    for instance in 0..instances {
        let n = rng.random_range(1..=12);
        let vectors = random_vectors(&mut rng, n);
        let cfg = TrainerConfig {
            seed: rng.random(),
            refine_iters: rng.random_range(0..3),
            ..TrainerConfig::new(2)
        };
        let (codebook, _) = train_codebook(&vectors, &cfg).map_err(|e| e.to_string())?;
        let (_, trained) = assign_members(&vectors, &codebook);
        let optimal = brute_force_two_means(&vectors);
        let (_, global) = assign_members(&vectors, &init_codebook(&vectors).unwrap());
        let tol = 1e-9 * global.max(1.0);
        ensure!(
            trained >= optimal - tol && trained <= global + tol,
            "instance {instance}: trained {trained} not in [{optimal}, {global}]"
        );
    }

    let separated = [
        BlockVector::splat(0.0),
        BlockVector::splat(0.0),
        BlockVector::splat(100.0),
        BlockVector::splat(100.0),
    ];
    ensure!(
        brute_force_two_means(&separated) == 0.0,
        "oracle disagrees on separated clusters"
    );
    let cfg = TrainerConfig {
        delta: 1.0,
        ..TrainerConfig::new(2)
    };
    let (codebook, report) = train_codebook(&separated, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        report.final_distortion() == Some(0.0),
        "separated clusters: {:?}",
        report.final_distortion()
    );
    let mut firsts: Vec<f64> = codebook.centroids().iter().map(|c| c.0[0]).collect();
    firsts.sort_by(f64::total_cmp);
    ensure!(
        firsts == [0.0, 100.0],
        "separated clusters centroids {:?}",
        codebook.centroids()
    );
    Ok(format!("{instances} instances within [brute-force optimum, global mean]; separated clusters reach 0"))
}

fn criterion_7() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let flags = ["--seed", "7", "--refine-iters", "2"];
    run_roundtrip(a.path(), &flags)?;
    run_roundtrip(b.path(), &flags)?;
    for name in ["codebook.cbk.csv", "indices.vqi", "reconstructed.pgm"] {
        let x = fs::read(a.path().join(name)).map_err(|e| e.to_string())?;
        let y = fs::read(b.path().join(name)).map_err(|e| e.to_string())?;
        ensure!(x == y, "{name} differs between runs");
    }
    Ok("codebook, index and image files byte-identical across two runs".into())
}

fn criterion_8() -> Outcome {
    let cases = 256;
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = || TestRng::from_seed(RngAlgorithm::ChaCha, &[8; 32]);

    let block = prop::array::uniform4(0.0..=255.0f64).prop_map(BlockVector);
    let codebooks = prop::collection::vec(block, 1..80).prop_map(|c| Codebook::new(c).unwrap());
    TestRunner::new_with_rng(config.clone(), rng())
        .run(&codebooks, |cb| {
            prop_assert_eq!(load_codebook(&save_codebook(&cb)).unwrap(), cb);
            Ok(())
        })
        .map_err(|e| format!("codebook round trip: {e}"))?;

    let maps = (1usize..60, 1usize..60, 1usize..=65536).prop_flat_map(|(w, h, m)| {
        let n = w.div_ceil(2) * h.div_ceil(2);
        prop::collection::vec(0..m as u32, n).prop_map(move |idx| {
            IndexMap::new(w, h, m, idx.into_iter().map(|i| i as u16).collect()).unwrap()
        })
    });
    TestRunner::new_with_rng(config, rng())
        .run(&maps, |map| {
            prop_assert_eq!(load_index_file(&save_index_file(&map)).unwrap(), map);
            Ok(())
        })
        .map_err(|e| format!("index round trip: {e}"))?;

    let golden = load_codebook(b"vqc,1,1,4\n128,128,128,128\n").map_err(|e| e.to_string())?;
    ensure!(
        golden == Codebook::new(vec![BlockVector::splat(128.0)]).unwrap(),
        "golden codebook parsed to {golden:?}"
    );
    Ok(format!(
        "{cases} random codebooks and {cases} random index maps round-trip; golden file parses"
    ))
}

fn criterion_9() -> Outcome {
    let uniform: Vec<u16> = (0..64).cycle().take(64 * 37).collect();
    let h = shannon_entropy(&uniform, 64).map_err(|e| e.to_string())?;
    ensure!(h == 6.0, "uniform-64 entropy = {h}");

    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    for _ in 0..500 {
        let m = rng.random_range(1..=1024usize);
        let len = rng.random_range(1..2000);
        let skew = rng.random_range(1..=m);
        let idx: Vec<u16> = (0..len).map(|_| rng.random_range(0..skew) as u16).collect();
        let h = shannon_entropy(&idx, m).map_err(|e| e.to_string())?;
        ensure!(
            (0.0..=(m as f64).log2()).contains(&h),
            "entropy {h} outside [0, log2 {m}]"
        );
    }

    let img = read_image("cameraman_200.pgm");
    ensure!(
        mse(&img, &img).map_err(|e| e.to_string())? == 0.0,
        "mse(a, a) != 0"
    );

    let grid: Vec<f64> = (0..2000)
        .map(|k| 1e-3 * 1.01f64.powi(k))
        .filter(|&m| m <= 65025.0 * 4.0)
        .collect();
    for pair in grid.windows(2) {
        let (p0, p1) = (psnr(pair[0]).unwrap(), psnr(pair[1]).unwrap());
        ensure!(
            p1 < p0,
            "psnr not decreasing at mse {} -> {}",
            pair[0],
            pair[1]
        );
    }
    Ok(format!("uniform-64 entropy = 6 exactly; 500 random streams bounded; psnr decreasing on {} grid points", grid.len()))
}

fn criterion_10() -> Outcome {
    let r = rates_for(64, 0.0);
    ensure!(
        r.raw_index_bpp == 1.5,
        "raw_index_bpp = {}",
        r.raw_index_bpp
    );
    ensure!(
        (r.compression_ratio - 5.3333).abs() <= 1e-4,
        "ratio = {}",
        r.compression_ratio
    );
    ensure!(
        (r.compression_ratio - 16.0 / 3.0).abs() <= 1e-9,
        "ratio = {}",
        r.compression_ratio
    );
    Ok(format!(
        "raw_index_bpp = {}, compression_ratio = {}",
        r.raw_index_bpp, r.compression_ratio
    ))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let (c4, c5) = panic::catch_unwind(criterion_4_and_5).unwrap_or_else(|_| {
        let e = "panicked".to_string();
        (Err(e.clone()), Err(e))
    });
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "PSNR formula anchor", guarded(criterion_1)),
        (2, "full-size experiment shape", guarded(criterion_2)),
        (3, "quality reproduction", guarded(criterion_3)),
        (4, "Lloyd monotonicity", c4),
        (5, "doubling monotonicity", c5),
        (6, "brute-force 2-means oracle", guarded(criterion_6)),
        (7, "determinism", guarded(criterion_7)),
        (8, "format round-trips", guarded(criterion_8)),
        (9, "metric invariants", guarded(criterion_9)),
        (10, "rate arithmetic", guarded(criterion_10)),
    ];
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
