//! Acceptance criteria. Runs as a plain binary: one PASS/FAIL line per
//! criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qinverse::experiment::{convergence_trace, tomography, truth};
use qinverse::inverse::{
    amplitudes_from_gram, conditioning_sweep, default_probes, predict_commuting, predict_with_band, reconstruct,
    reconstruction_distance, solve_counts, solve_intervals, solve_pointwise, unknown_count, weak_reconstruct,
    DesignMatrix, WeakInput, WEAK_REGIME_RATIO,
};
use qinverse::numerics::{linspace, logspace};
use qinverse::paths::basis_containing;
use qinverse::pointer::{
    density_at, exact_mean_momentum, exact_mean_reading, interval_probability, joint_density_at,
    mixed_reading_density, momentum_density, reading_density, relative_amplitudes, renormalized,
    strong_limit_stats, unconditional_density_at, unknown_pairs, weak_limit_stats,
};
use qinverse::sampler::{count, sample, sample_stream};
use qinverse::scenarios;
use qinverse::{GramMatrix, MixedState, PathAmplitudes, PointerConfig, QuantumState};

type Check = Result<String, String>;

const A1: Complex64 = Complex64::new(-0.3352645524950123, 0.4606179901317372);
const A2: Complex64 = Complex64::new(-0.3950113991340429, -0.10667318045754831);
const ARRIVAL: f64 = 0.5532714735206368;
const MOD_A1: f64 = 0.7659243676387268;
const MOD_A2: f64 = 0.5500797711535929;
const PHI: f64 = 1.2053765242897185;
const DECOHERED: f64 = 0.49198442586744484;
const UNPERTURBED: f64 = 0.65857989382302;
const FIG4_SEED: u64 = 20240401;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fig4() -> (PathAmplitudes, PointerConfig) {
    let amps = scenarios::fig4_system().path_amplitudes();
    let cfg = PointerConfig::new(scenarios::FIG4_DELTA_F, vec![1.0, -1.0]).unwrap();
    (amps, cfg)
}

fn fig4_reproduction() -> Check {
    let start = Instant::now();
    let system = scenarios::fig4_system();
    let (amps, cfg) = fig4();
    let partition = scenarios::fig4_partition();
    ensure((amps.0[0] - A1).norm() < 1e-12 && (amps.0[1] - A2).norm() < 1e-12, || {
        format!("path amplitudes {:?} differ from the fixtures", amps.0)
    })?;
    let t = truth(&system, &cfg, &partition, 0).map_err(|e| e.to_string())?;
    let expected = [MOD_A1, MOD_A2, PHI];
    let got = [t.moduli[0], t.moduli[1], t.phases[1]];
    ensure(
        expected.iter().zip(&got).all(|(a, b)| (a - b).abs() < 1e-12) && (t.arrival_probability - ARRIVAL).abs() < 1e-12,
        || format!("ground truth {got:?} differs from fixtures {expected:?}"),
    )?;

    let rho = reading_density(&amps, &cfg).map_err(|e| e.to_string())?;
    let record = sample(&rho, 100_000, FIG4_SEED);
    let rec = solve_counts(&count(&record, &partition), &partition, &cfg)
        .and_then(|fit| reconstruct(&fit, &cfg, 0))
        .map_err(|e| e.to_string())?;
    let se = rec.standard_errors.clone().ok_or("no standard errors")?;
    let recovered = [rec.moduli[0], rec.moduli[1], rec.phases[1]];
    let errors = [se.moduli[0], se.moduli[1], se.phases[1]];
    let z: Vec<f64> = (0..3).map(|i| (recovered[i] - expected[i]).abs() / errors[i]).collect();
    ensure(z.iter().all(|z| *z <= 3.0), || format!("deviations in SE units {z:?}"))?;

    let trace = convergence_trace(&record.readings, &partition, &cfg, 0, 100);
    ensure(trace.len() == 1000 && trace[999].moduli == rec.moduli, || {
        "convergence trace does not end at the final reconstruction".into()
    })?;

    let truth_rec = amplitudes_from_gram(&GramMatrix::from_amplitudes(&renormalized(&amps, &cfg).unwrap()), 0).unwrap();
    let ks = [1_000usize, 10_000, 100_000];
    let mut rms = Vec::new();
    for &k in &ks {
        let mut sq = 0.0;
        for s in 0..20u64 {
            let r = sample_stream(&rho, k, 7_000 + s, k as u64);
            let rec = solve_counts(&count(&r, &partition), &partition, &cfg)
                .and_then(|fit| reconstruct(&fit, &cfg, 0))
                .map_err(|e| format!("K = {k}, seed {s}: {e}"))?;
            sq += reconstruction_distance(&rec, &truth_rec).powi(2);
        }
        rms.push((sq / 20.0).sqrt());
    }
    let x: Vec<f64> = ks.iter().map(|k| (*k as f64).ln()).collect();
    let y: Vec<f64> = rms.iter().map(|e| e.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    ensure((-0.75..=-0.25).contains(&slope), || format!("error slope {slope:.3} (rms {rms:?})"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "|z| = {:.2}, {:.2}, {:.2} SE; error slope {slope:.3}; {elapsed:.2?}",
        z[0], z[1], z[2]
    ))
}

fn noise_free_round_trip() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let n = 2 + (i % 3) as usize;
        let (sys, delta_f) = scenarios::round_trip_system(n, i);
        let amps = sys.path_amplitudes();
        let cfg = PointerConfig::new(delta_f, sys.observable.eigenvalues().to_vec()).unwrap();
        let probes = default_probes(&cfg, 4 * unknown_count(n));
        let values: Vec<f64> = probes.iter().map(|&f| density_at(&amps, &cfg, f).unwrap()).collect();
        let rebuilt = solve_pointwise(&values, &probes, &cfg)
            .and_then(|fit| amplitudes_from_gram(&fit.gram, 0))
            .and_then(|rec| reading_density(&rec.amplitudes(false), &cfg))
            .map_err(|e| format!("instance {i} (N = {n}): {e}"))?;
        let diff = rebuilt.max_abs_difference(&reading_density(&amps, &cfg).unwrap());
        ensure(diff < 1e-8, || format!("instance {i} (N = {n}): max difference {diff:.3e}"))?;
        worst = worst.max(diff);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("100 instances, worst pointwise difference {worst:.2e}; {elapsed:.2?}"))
}

fn fig5_prediction() -> Check {
    let system = scenarios::fig4_system();
    let (amps, cfg) = fig4();
    let partition = scenarios::fig4_partition();
    let c = [1.0, -1.0];
    let w = truth(&system, &cfg, &partition, 0).unwrap().cell_probabilities;
    let exact_fit = solve_intervals(&w, &partition, &cfg, None).map_err(|e| e.to_string())?;
    let record = sample(&reading_density(&amps, &cfg).unwrap(), 100_000, 5);
    let sampled_fit = solve_counts(&count(&record, &partition), &partition, &cfg).map_err(|e| e.to_string())?;
    let mut noise_free: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for df in [0.5, 2.0] {
        let exact = reading_density(&amps, &PointerConfig::new(df, c.to_vec()).unwrap()).unwrap();
        let predicted = predict_commuting(&exact_fit.gram, &c, df).map_err(|e| e.to_string())?;
        noise_free = noise_free.max(predicted.max_abs_difference(&exact));
        let band = predict_with_band(&sampled_fit, &c, df).map_err(|e| e.to_string())?;
        let peak = exact.values.iter().copied().fold(0.0, f64::max);
        for i in 0..exact.values.len() {
            let d = (band.density.values[i] - exact.values[i]).abs();
            if d > 1e-9 * peak {
                worst_z = worst_z.max(d / band.standard_error[i]);
            }
        }
    }
    ensure(noise_free < 1e-8, || format!("noise-free prediction off by {noise_free:.3e}"))?;
    ensure(worst_z <= 4.5, || format!("sampled prediction outside the band: {worst_z:.2} SE"))?;
    Ok(format!("noise-free {noise_free:.2e}; sampled within {worst_z:.2} pointwise SE"))
}

fn fig6_sweep() -> Check {
    let system = scenarios::fig4_system();
    let widths = logspace(2e-3, 2e3, 25);
    let rows = conditioning_sweep(&system, &scenarios::fig4_partition(), &widths, 100_000, 6).map_err(|e| e.to_string())?;
    let peak = rows.iter().map(|r| r.abs_det).fold(0.0, f64::max);
    let (lo, hi) = (rows[0], rows[24]);
    ensure(lo.abs_det < 1e-8 * peak && hi.abs_det < 1e-8 * peak, || {
        format!("|det| at the ends {:.3e}, {:.3e} vs peak {peak:.3e}", lo.abs_det, hi.abs_det)
    })?;
    ensure((lo.arrival_prob - DECOHERED).abs() < 1e-4 && (hi.arrival_prob - UNPERTURBED).abs() < 1e-4, || {
        format!("arrival limits {} and {}", lo.arrival_prob, hi.arrival_prob)
    })?;
    ensure(
        rows.iter().all(|r| r.arrival_prob >= DECOHERED - 1e-12 && r.arrival_prob <= UNPERTURBED + 1e-12),
        || "arrival probability leaves the band between its limits".into(),
    )?;
    Ok(format!(
        "peak |det| {peak:.3}, ends {:.1e} / {:.1e}; arrival {:.6} -> {:.6}",
        lo.abs_det, hi.abs_det, lo.arrival_prob, hi.arrival_prob
    ))
}

fn weak_limit_suite() -> Check {
    let (amps, _) = fig4();
    let projector = [1.0, 0.0];
    let alpha = relative_amplitudes(&amps).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
        .iter()
        .map(|&r| {
            let cfg = PointerConfig::new(r, projector.to_vec()).unwrap();
            (exact_mean_reading(&amps, &cfg).unwrap() - alpha[0].re).abs()
        })
        .collect();
    ensure(errs.windows(2).all(|w| w[1] < w[0]) && errs[3] < 1e-3, || format!("<f> errors {errs:?}"))?;

    let df = 50.0;
    let cfg = PointerConfig::new(df, projector.to_vec()).unwrap();
    let quad = momentum_density(&amps, &cfg).unwrap().mean();
    let weak = alpha[0].im / (df * df);
    let rel = (quad.abs() - weak.abs()).abs() / weak.abs();
    ensure(rel < 0.05, || format!("momentum mean {quad:.4e} vs {weak:.4e}"))?;

    let inputs: Vec<WeakInput> = (0..2)
        .map(|n| {
            let mut proj = vec![0.0; 2];
            proj[n] = 1.0;
            let cfg = PointerConfig::new(df, proj).unwrap();
            let record = sample_stream(&reading_density(&amps, &cfg).unwrap(), 1_000_000, 11, n as u64);
            WeakInput::from_readings(&record.readings, exact_mean_momentum(&amps, &cfg).unwrap(), 0.0).unwrap()
        })
        .collect();
    let est = weak_reconstruct(&inputs, df, 1.0, WEAK_REGIME_RATIO).map_err(|e| e.to_string())?;
    let z: Vec<f64> = (0..2)
        .map(|n| (est.alpha[n] - alpha[n]).norm() / est.se_re[n].hypot(est.se_im[n]))
        .collect();
    ensure(z.iter().all(|z| *z <= 3.0), || format!("weak estimates off by {z:?} SE"))?;
    Ok(format!(
        "<f> error at 40x span {:.2e}; momentum within {:.2}%; α within {:.2}, {:.2} SE",
        errs[3],
        100.0 * rel,
        z[0],
        z[1]
    ))
}

fn strong_limit_suite() -> Check {
    let (amps, _) = fig4();
    let df = 2e-3;
    let cfg = PointerConfig::new(df, vec![1.0, -1.0]).unwrap();
    let total = amps.sum_of_squares();
    let mut worst: f64 = 0.0;
    for (j, cj) in [1.0, -1.0].iter().enumerate() {
        let p = interval_probability(&amps, &cfg, (cj - 3.0 * df, cj + 3.0 * df), true).unwrap();
        worst = worst.max((p - amps.0[j].norm_sqr() / total).abs());
    }
    ensure(worst < 1e-4, || format!("interval masses off by {worst:.3e}"))?;

    let sys = scenarios::random_system(3, 41);
    let a = sys.path_amplitudes();
    let projector = [1.0, 0.0, 0.0];
    let rest = a.0[1] + a.0[2];
    ensure(rest.norm() > 1e-3, || "complement amplitudes cancel".into())?;
    let coherent = a.0[0].norm_sqr() / (a.0[0].norm_sqr() + rest.norm_sqr());
    let stats = strong_limit_stats(&a, &projector).map_err(|e| e.to_string())?;
    ensure((stats.mean - coherent).abs() < 1e-12, || format!("projector mean {} vs {coherent}", stats.mean))?;
    ensure((stats.mean - stats.distinct_mean).abs() > 1e-3, || {
        format!("projector mean equals the nondegenerate one ({})", stats.mean)
    })?;
    let pcfg = PointerConfig::new(1e-3, projector.to_vec()).unwrap();
    let mass = interval_probability(&a, &pcfg, (1.0 - 3e-3, 1.0 + 3e-3), true).unwrap();
    ensure((mass - coherent).abs() < 1e-4, || format!("narrow-pointer mass {mass} vs {coherent}"))?;
    Ok(format!(
        "masses within {worst:.1e}; projector mean {coherent:.4} vs nondegenerate {:.4}",
        stats.distinct_mean
    ))
}

fn causality_suite() -> Check {
    let mut worst: f64 = 0.0;
    for (sys, c) in [
        (scenarios::fig4_system(), vec![1.0, -1.0]),
        (scenarios::random_system(3, 8), scenarios::random_system(3, 8).observable.eigenvalues().to_vec()),
    ] {
        let n = sys.dim();
        let cfg = PointerConfig::new(0.6, c).unwrap();
        let basis = basis_containing(&sys.detection);
        let finals: Vec<PathAmplitudes> = (0..n)
            .map(|k| {
                let d = QuantumState::from_vector(basis.column(k).into_owned()).unwrap();
                sys.with_detection(d).unwrap().path_amplitudes()
            })
            .collect();
        let probs: Vec<f64> = sys.one_step_amplitudes().as_slice().iter().map(|a| a.norm_sqr()).collect();
        for f in linspace(-5.0, 5.0, 201) {
            let summed: f64 = finals.iter().map(|a| joint_density_at(a, &cfg, f)).sum();
            worst = worst.max((summed - unconditional_density_at(&probs, &cfg, f)).abs());
        }
    }
    ensure(worst < 1e-10, || format!("summed post-selected densities off by {worst:.3e}"))?;

    for n in 2..=5 {
        let cfg = PointerConfig::new(0.7, linspace(-1.0, 1.0, n)).unwrap();
        let probes = default_probes(&cfg, 4 * unknown_count(n));
        let design = DesignMatrix::one_step(&cfg, &probes).map_err(|e| e.to_string())?;
        let off: Vec<usize> = unknown_pairs(n)
            .iter()
            .enumerate()
            .filter(|(_, (j, k))| j != k)
            .map(|(i, _)| i)
            .collect();
        ensure(design.zero_columns() == off && design.structural_rank() == n, || {
            format!("N = {n}: zero columns {:?}, structural rank {}", design.zero_columns(), design.structural_rank())
        })?;
    }
    Ok(format!(
        "sum over final basis matches within {worst:.1e}; one-step rank N for N = 2..5"
    ))
}

fn box_suite() -> Check {
    let a = scenarios::box_system().path_amplitudes();
    ensure((a.0[0] + a.0[1]).norm() < 1e-12 && a.0[0].norm() > 1e-3, || {
        "fixture lacks the sign relation".into()
    })?;
    let degenerate = strong_limit_stats(&a, &[1.0, 1.0, 0.0]).map_err(|e| e.to_string())?;
    let distinct = strong_limit_stats(&a, &[1.0, 2.0, 3.0]).map_err(|e| e.to_string())?;
    let p_box = degenerate.masses[degenerate.class_values.iter().position(|v| *v == 1.0).unwrap()];
    let p_split = distinct.masses[0] + distinct.masses[1];
    ensure(p_box < 1e-12 && p_split > 1e-3, || format!("P(box) = {p_box:.3e}, P(C1)+P(C2) = {p_split:.3e}"))?;
    let half = weak_limit_stats(&a, &[1.0, 0.0, 0.0], 100.0).map_err(|e| e.to_string())?;
    let whole = weak_limit_stats(&a, &[1.0, 1.0, 0.0], 100.0).map_err(|e| e.to_string())?;
    ensure(half.mean_reading.abs() > 1e-3 && whole.mean_reading.abs() < 1e-12, || {
        format!("weak means {} and {}", half.mean_reading, whole.mean_reading)
    })?;
    Ok(format!(
        "P(box) = {p_box:.1e}, P(C1)+P(C2) = {p_split:.4}; weak half {:.4}, whole {:.1e}",
        half.mean_reading, whole.mean_reading
    ))
}

fn mixed_state_suite() -> Check {
    let sys = scenarios::fig4_system();
    let c = [1.0, -1.0];
    let cfg = PointerConfig::new(0.8, c.to_vec()).unwrap();
    let pure = reading_density(&sys.path_amplitudes(), &cfg).unwrap();
    let single = mixed_reading_density(&MixedState::pure(sys.preparation.clone()), &sys, &cfg).map_err(|e| e.to_string())?;
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    ensure(bits(&single.density.values) == bits(&pure.values) && single.density.axis == pure.axis, || {
        "single-component density differs from the pure one".into()
    })?;
    ensure(single.exact_mean.to_bits() == exact_mean_reading(&sys.path_amplitudes(), &cfg).unwrap().to_bits(), || {
        "single-component mean differs from the pure one".into()
    })?;

    let mixed = MixedState::new(vec![
        (0.3, QuantumState::basis(2, 0).unwrap()),
        (0.7, QuantumState::basis(2, 1).unwrap()),
    ])
    .unwrap();
    let out = mixed_reading_density(&mixed, &sys, &cfg).map_err(|e| e.to_string())?;
    let (mut sn, mut sd, mut wn, mut wd) = (0.0, 0.0, Complex64::new(0.0, 0.0), 0.0);
    for (w, state) in mixed.components() {
        let a = sys.with_preparation(state.clone()).unwrap().path_amplitudes();
        for j in 0..2 {
            sn += w * c[j] * a.0[j].norm_sqr();
            sd += w * a.0[j].norm_sqr();
        }
        let s = a.0[0] + a.0[1];
        wn += s.conj() * (a.0[0] * c[0] + a.0[1] * c[1]) * w;
        wd += w * s.norm_sqr();
    }
    let (ds, dw) = ((out.strong_mean - sn / sd).abs(), (out.weak_mean - wn.re / wd).abs());
    ensure(ds < 1e-10 && dw < 1e-10, || format!("strong off by {ds:.3e}, weak off by {dw:.3e}"))?;
    Ok(format!("bit-identical pure reduction; strong/weak means within {:.1e}", ds.max(dw)))
}

fn tomography_suite() -> Check {
    let system = scenarios::fig4_system();
    let (amps, cfg) = fig4();
    let partition = scenarios::fig4_partition();
    let record = sample(&reading_density(&amps, &cfg).unwrap(), 1_000_000, 7);
    let rec = solve_counts(&count(&record, &partition), &partition, &cfg)
        .and_then(|fit| reconstruct(&fit, &cfg, 0))
        .map_err(|e| e.to_string())?;
    let out = tomography(&rec, &system).map_err(|e| e.to_string())?;
    ensure(out.fidelity > 0.99, || format!("fidelity {}", out.fidelity))?;
    Ok(format!(
        "fidelity {:.6} (branches {:.4} / {:.4})",
        out.fidelity, out.fidelity_direct, out.fidelity_conjugate
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("qubit reconstruction from three cells", fig4_reproduction),
        ("noise-free round trip", noise_free_round_trip),
        ("prediction at other widths", fig5_prediction),
        ("pointer-width sweep", fig6_sweep),
        ("weak limit", weak_limit_suite),
        ("strong limit", strong_limit_suite),
        ("causality and one-step rank", causality_suite),
        ("box", box_suite),
        ("mixed states", mixed_state_suite),
        ("state tomography", tomography_suite),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
