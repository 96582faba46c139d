//! Acceptance runs at full size. Each test prints one PASS/FAIL line to
//! stderr (uncaptured) and then asserts.

use std::io::Write;

use kle_core::chi::{t_kernel, ChiConfig};
use kle_core::harness::{self, BiasScanOptions, ChiRequest, CoverageOptions};
use kle_core::rng::{stream, Domain};
use kle_core::{
    estimate, nn_bruteforce, nn_distances, nn_kdtree, plan, unit_ball_volume, DensityModel, Family,
    NormKind, SampleSet, ShellSpec,
};
use rand::Rng;

fn report(label: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] {status} {label}: {detail}");
}

fn gaussian(d: usize) -> DensityModel {
    DensityModel::new(Family::Gaussian { sigma: 1.0 }, d).unwrap()
}

fn chi_row(norm: NormKind, rows: &[(usize, f64, f64)]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for &(d, target, tol) in rows {
        let est = harness::cmd_chi(d, norm, &ChiConfig::new(10_000_000, 2024))
            .unwrap()
            .estimate;
        let ok = (est.value - target).abs() <= tol;
        pass &= ok;
        parts.push(format!(
            "d={d} {:.4}±{:.4} vs {target}{}",
            est.value,
            est.stderr,
            if ok { "" } else { " (out)" }
        ));
    }
    (pass, parts.join("; "))
}

#[test]
fn chi_table_max_norm() {
    let table = [2.14, 2.31, 2.47, 2.60, 2.70, 2.78, 2.84, 2.88, 2.91, 2.94];
    let mut rows: Vec<(usize, f64, f64)> = table
        .iter()
        .enumerate()
        .map(|(i, &v)| (i + 1, v, 0.03))
        .collect();
    rows.push((20, 3.03, 0.05));
    let (pass, detail) = chi_row(NormKind::Chebyshev, &rows);
    report("chi_d table, max norm, 10^7 draws", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn chi_table_euclidean() {
    let table = [2.14, 2.29, 2.42, 2.52, 2.61, 2.67, 2.7, 2.7, 2.8, 2.9];
    let rows: Vec<(usize, f64, f64)> = table
        .iter()
        .enumerate()
        .map(|(i, &v)| (i + 1, v, if i < 6 { 0.05 } else { 0.08 }))
        .collect();
    let (pass, detail) = chi_row(NormKind::Euclidean, &rows);
    report("chi_d table, Euclidean norm, 10^7 draws", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn richardson_inflation_constants() {
    let expected = [(4, 34.97), (5, 54.97), (6, 79.65), (7, 109.01)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, target) in expected {
        let a = plan(d, 100_000).unwrap().a_d();
        pass &= (a - target).abs() <= 0.01;
        parts.push(format!("a_{d}={a:.4} vs {target}"));
    }
    let detail = parts.join("; ");
    report("Richardson inflation a_4..a_7", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn consistency_at_large_n() {
    let exp = DensityModel::new(Family::Exponential, 1).unwrap();
    let s = exp.sample(100_001, &mut stream(1, Domain::Sample, 0));
    let h_exp = estimate(&s, 2.14, 0.05).unwrap().h;
    let s = gaussian(2).sample(100_001, &mut stream(2, Domain::Sample, 0));
    let h_gauss = estimate(&s, 2.29, 0.05).unwrap().h;
    let target = (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    let pass = (h_exp - 1.0).abs() < 0.02 && (h_gauss - target).abs() < 0.03;
    let detail = format!(
        "Exp(1) H_N={h_exp:.5} (err {:+.5}); Gaussian d=2 H_N={h_gauss:.5} (err {:+.5})",
        h_exp - 1.0,
        h_gauss - target
    );
    report("consistency at N=10^5", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn variance_estimate_gaussian() {
    let s = gaussian(1).sample(100_001, &mut stream(3, Domain::Sample, 0));
    let chi1 = 2.14;
    let v = estimate(&s, chi1, 0.05).unwrap().v;
    let target = 0.5 + chi1;
    let pass = (v - target).abs() < 0.05;
    let detail = format!("V_N={v:.4} vs {target}");
    report("variance estimate, Gaussian d=1, N=10^5", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn clt_coverage() {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [1, 2] {
        let opts = CoverageOptions {
            points: 4001,
            replicates: 300,
            alpha: 0.05,
            norm: NormKind::Euclidean,
            extrapolate: false,
            seed: 40 + d as u64,
            chi: ChiRequest::default(),
        };
        let rep = harness::cmd_coverage(&gaussian(d), &opts).unwrap();
        let c = rep.summary.coverage;
        pass &= (0.90..=0.985).contains(&c);
        parts.push(format!("d={d} coverage {c:.4} (chi {})", rep.chi.value));
    }
    let detail = parts.join("; ");
    report("CLT coverage, N=4000, 300 replicates", pass, &detail);
    assert!(pass, "{detail}");
}

fn bias_scan(d: usize, window: (f64, f64)) -> (bool, String) {
    let opts = BiasScanOptions {
        sizes: vec![501, 1001, 2001, 4001, 8001],
        replicates: 400,
        norm: NormKind::Euclidean,
        seed: 70 + d as u64,
        extrapolate: false,
        power_z: harness::DEFAULT_POWER_Z,
    };
    let rep = harness::cmd_bias_scan(&gaussian(d), &opts).unwrap();
    let levels: Vec<String> = rep
        .levels
        .iter()
        .map(|l| {
            format!(
                "{}:{:+.5}±{:.5}",
                l.points - 1,
                l.plain.mean_bias,
                l.plain.se
            )
        })
        .collect();
    let slope = rep.unchecked_fit.slope;
    let in_window = (window.0..=window.1).contains(&slope);
    let pass = !rep.insufficient_power && in_window;
    let detail = format!(
        "d={d} slope {slope:.3}±{:.3} (window [{}, {}]{}){} levels [{}]",
        rep.unchecked_fit.slope_se,
        window.0,
        window.1,
        if in_window { "" } else { ", outside" },
        if rep.insufficient_power {
            ", insufficient power"
        } else {
            ""
        },
        levels.join(" ")
    );
    (pass, detail)
}

#[test]
fn bias_rate_gaussian_d4() {
    let (pass, detail) = bias_scan(4, (-0.65, -0.35));
    report("bias rate, Gaussian d=4, 400 replicates", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn bias_rate_gaussian_d2() {
    let (pass, detail) = bias_scan(2, (-1.3, -0.7));
    report("bias rate, Gaussian d=2, 400 replicates", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn kdtree_equals_bruteforce() {
    let mut rng = stream(8, Domain::Sample, 0);
    let mut mismatches = 0;
    for instance in 0..200 {
        let d = rng.random_range(1..=6);
        let points = rng.random_range(2..=512);
        let norm = if instance % 2 == 0 {
            NormKind::Euclidean
        } else {
            NormKind::Chebyshev
        };
        // every fourth instance sits on a coarse grid to force ties
        let grid = instance % 4 == 3;
        let data: Vec<f64> = (0..points * d)
            .map(|_| {
                let x: f64 = rng.random_range(-3.0..3.0);
                if grid {
                    (x * 4.0).round() / 4.0
                } else {
                    x
                }
            })
            .collect();
        let s = SampleSet::new(data, d, norm).unwrap();
        let a = nn_kdtree(&s).unwrap();
        let b = nn_bruteforce(&s).unwrap();
        if a.r != b.r {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    let detail = format!("{mismatches} of 200 instances differ");
    report("kd-tree equals brute force", pass, &detail);
    assert!(pass, "{detail}");
}

/// Kolmogorov-Smirnov distance of a sample from a continuous cdf.
fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            f64::max(f - i as f64 / n, (i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn property_suite() {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool, info: String| {
        if !ok {
            failures.push(format!("{name} ({info})"));
        }
    };

    let d = 3;
    let base = gaussian(d).sample(2001, &mut stream(9, Domain::Sample, 0));
    let e0 = estimate(&base, 2.42, 0.05).unwrap();
    let shift = [10.0, -5.0, 3.0];
    let moved = base.map_coords(|k, x| x + shift[k]);
    let e1 = estimate(&moved, 2.42, 0.05).unwrap();
    check(
        "translation",
        (e1.h - e0.h).abs() < 1e-9,
        format!("{:e}", e1.h - e0.h),
    );
    for lambda in [0.01, 7.0] {
        let scaled = base.map_coords(|_, x| lambda * x);
        let e2 = estimate(&scaled, 2.42, 0.05).unwrap();
        let dh = e2.h - e0.h - d as f64 * f64::ln(lambda);
        check(
            "scaling",
            dh.abs() < 1e-9,
            format!("lambda={lambda} {dh:e}"),
        );
        check(
            "variance scale",
            (e2.v - e0.v).abs() < 1e-9,
            format!("lambda={lambda}"),
        );
    }

    let mut worst: f64 = 0.0;
    for d in 4..=24 {
        let p = plan(d, 1_000_000).unwrap();
        for i in 0..=p.ell() {
            worst = worst.max(p.moment_residual(i).abs());
        }
    }
    check(
        "Vandermonde residuals",
        worst < 1e-10,
        format!("max {worst:e}"),
    );

    let mut rng = stream(10, Domain::Chi, 0);
    let mut mean_se = |u: f64, v: f64, d: usize, norm: NormKind| {
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| t_kernel(u, v, d, norm, &mut rng).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (m, (var / n as f64).sqrt())
    };
    for norm in [NormKind::Euclidean, NormKind::Chebyshev] {
        for &(u, v, d) in &[(0.3, 2.0, 2), (1.0, 4.0, 3), (0.2, 1.5, 6)] {
            let (a, sa) = mean_se(u, v, d, norm);
            let (b, sb) = mean_se(v, u, d, norm);
            check(
                "T symmetry",
                (a - b).abs() < 3.0 * sa.hypot(sb),
                format!("{norm} d={d}"),
            );
            let df = d as f64;
            let (hi, lo) = (u.max(v), u.min(v));
            let bound = df
                * 2f64.powi(d as i32 - 1)
                * hi.powf(1.0 - 1.0 / df)
                * lo.powf(1.0 / df)
                * lo.exp();
            check("T bound", a <= bound + 3.0 * sa, format!("{norm} d={d}"));
        }
    }

    let mut rng = stream(11, Domain::Sample, 0);
    for norm in [NormKind::Euclidean, NormKind::Chebyshev] {
        let (t, outer, d) = (0.4, 1.3, 3);
        let spec = ShellSpec::new(t, outer, d, norm).unwrap();
        let radii: Vec<f64> = (0..100_000)
            .map(|_| {
                let y = spec.sample(&mut rng);
                match norm {
                    NormKind::Euclidean => y.iter().map(|c| c * c).sum::<f64>().sqrt(),
                    NormKind::Chebyshev => y.iter().fold(0.0, |m, c| f64::max(m, c.abs())),
                }
            })
            .collect();
        let k = ks(radii, |x| {
            (x.powi(3) - t.powi(3)) / (outer.powi(3) - t.powi(3))
        });
        check("shell KS", k < 0.01, format!("{norm} {k:.4}"));
    }

    let model = gaussian(1);
    let s = model.sample(100_001, &mut stream(12, Domain::Sample, 0));
    let nn = nn_distances(&s).unwrap();
    let vd = unit_ball_volume(1, NormKind::Euclidean).unwrap();
    let z: Vec<f64> = s
        .rows()
        .zip(&nn.log_y)
        .map(|(x, ly)| vd * (model.log_density(x).unwrap() + ly).exp())
        .collect();
    let k = ks(z, |x| -(-x).exp_m1());
    check("Exp(1) limit KS", k < 0.01, format!("{k:.4}"));

    let pass = failures.is_empty();
    let detail = if pass {
        "translation, scaling, V_N scale, Vandermonde, T symmetry and bound, shell KS, Exp(1) limit KS".to_string()
    } else {
        failures.join("; ")
    };
    report("property suite", pass, &detail);
    assert!(pass, "{detail}");
}
