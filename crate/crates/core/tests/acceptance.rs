//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use el_sim_core::diagnostics::{defect_density, young_transform, FieldSamples, RecessionInvariant};
use el_sim_core::initial::band_limited_field;
use el_sim_core::io::{read_energy_csv, read_snapshot, RunConfig};
use el_sim_core::oseen_frank::{energy_density, energy_density_tensor_form, f_h, f_s, DirectorSample, ElasticModel, FrankConstants, SplitMode};
use el_sim_core::regularized::{free_energy_of, variational_derivative, DirectorFields, PenaltySchedule, RegularizationParams};
use el_sim_core::runner::{run_to_dir, sweep};
use el_sim_core::spectral::{coercivity_identity_check, SpectralDirector, SpectralVector, TorusGrid};
use el_sim_core::stresses::ericksen_identity_residual;
use el_sim_core::tensor::{hat, levi_civita, Mat3, Ten3, Ten4, Ten6, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict, secs: f64) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {:>2} {:<28} {} [{secs:.1} s]", v.id, v.name, v.detail);
}

fn uniform(r: &mut ChaCha8Rng) -> f64 {
    r.random_range(-1.0..1.0)
}

fn vec3(r: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(uniform(r), uniform(r), uniform(r))
}

fn mat3(r: &mut ChaCha8Rng) -> Mat3 {
    let mut m = Mat3::ZERO;
    for row in m.0.iter_mut() {
        for x in row.iter_mut() {
            *x = uniform(r);
        }
    }
    m
}

fn ten3(r: &mut ChaCha8Rng) -> Ten3 {
    let mut t = Ten3::ZERO;
    for a in t.0.iter_mut() {
        for b in a.iter_mut() {
            for x in b.iter_mut() {
                *x = uniform(r);
            }
        }
    }
    t
}

fn rel(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(f64::MIN_POSITIVE, |m, x| m.max(x.abs()));
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn flat3(m: &Mat3) -> Vec<f64> {
    m.0.iter().flatten().copied().collect()
}

fn flat_t3(t: &Ten3) -> Vec<f64> {
    t.0.iter().flatten().flatten().copied().collect()
}

const R3: std::ops::Range<usize> = 0..3;

fn tensor_oracles() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b, v, w) = (mat3(&mut r), mat3(&mut r), vec3(&mut r), vec3(&mut r));
        let g = ten3(&mut r);
        let lam = Ten4(std::array::from_fn(|_| uniform(&mut r)));
        let th = Ten6(Box::new(std::array::from_fn(|_| uniform(&mut r))));

        let mut ab = Mat3::ZERO;
        let mut av = Vec3::ZERO;
        let mut ga = Vec3::ZERO;
        let mut gv = Mat3::ZERO;
        let mut vg = Mat3::ZERO;
        let mut la = Mat3::ZERO;
        let mut lg = Vec3::ZERO;
        let mut tg = Ten3::ZERO;
        let mut eps_vw = Vec3::ZERO;
        let eps = levi_civita();
        for i in R3 {
            for j in R3 {
                av.0[i] += a.0[i][j] * v.0[j];
                for k in R3 {
                    ab.0[i][k] += a.0[i][j] * b.0[j][k];
                    ga.0[i] += g.0[i][j][k] * a.0[j][k];
                    gv.0[i][j] += g.0[i][j][k] * v.0[k];
                    vg.0[j][k] += v.0[i] * g.0[i][j][k];
                    eps_vw.0[i] += eps.0[i][j][k] * v.0[j] * w.0[k];
                    for l in R3 {
                        la.0[i][j] += lam.get(i, j, k, l) * a.0[k][l];
                        lg.0[i] += lam.get(i, j, k, l) * g.0[j][k][l];
                        for m in R3 {
                            for n in R3 {
                                tg.0[i][j][k] += th.get(i, j, k, l, m, n) * g.0[l][m][n];
                            }
                        }
                    }
                }
            }
        }
        let mut ta = Ten4::zeros();
        for (k, l, m, n) in (0..81).map(|p| (p / 27, p / 9 % 3, p / 3 % 3, p % 3)) {
            let s: f64 = R3.flat_map(|i| R3.map(move |j| (i, j))).map(|(i, j)| a.0[i][j] * th.get(i, j, k, l, m, n)).sum();
            ta.set(k, l, m, n, s);
        }
        let cases: [(Vec<f64>, Vec<f64>); 10] = [
            (flat3(&a.matmul(&b)), flat3(&ab)),
            (a.mul_vec(&v).0.to_vec(), av.0.to_vec()),
            (g.contract_mat(&a).0.to_vec(), ga.0.to_vec()),
            (flat3(&g.dot_vec(&v)), flat3(&gv)),
            (flat3(&g.left_dot_vec(&v)), flat3(&vg)),
            (flat3(&lam.contract_mat(&a)), flat3(&la)),
            (lam.triple_dot_ten3(&g).0.to_vec(), lg.0.to_vec()),
            (flat_t3(&th.triple_dot_ten3(&g)), flat_t3(&tg)),
            (th.left_contract_mat(&a).0.to_vec(), ta.0.to_vec()),
            (hat(&v).mul_vec(&w).0.to_vec(), eps_vw.0.to_vec()),
        ];
        for (got, want) in &cases {
            worst = worst.max(rel(got, want));
        }
        worst = worst.max(rel(&v.cross(&w).0, &eps_vw.0));
    }
    Verdict { id: 1, name: "tensor oracles", pass: worst < 1e-13, detail: format!("max rel err {worst:.2e} < 1e-13") }
}

fn frank(r: &mut ChaCha8Rng, split: SplitMode) -> FrankConstants {
    FrankConstants::new(r.random_range(0.1..3.0), r.random_range(0.1..3.0), r.random_range(0.1..3.0), split).unwrap()
}

fn energy_forms() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for split in [SplitMode::MinSplit, SplitMode::EqualSplit] {
        for _ in 0..1000 {
            let c = frank(&mut r, split);
            let s = DirectorSample::new(vec3(&mut r), mat3(&mut r));
            let (a, b) = (energy_density(&c, &s), energy_density_tensor_form(&c, &s));
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    Verdict { id: 2, name: "energy-form equivalence", pass: worst < 1e-12, detail: format!("max rel dev {worst:.2e} < 1e-12") }
}

fn central(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

fn derivative_consistency() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(103);
    let h = 1e-5;
    let mut local = 0.0f64;
    for i in 0..100 {
        let c = frank(&mut r, if i % 2 == 0 { SplitMode::MinSplit } else { SplitMode::EqualSplit });
        let s0 = DirectorSample::new(vec3(&mut r), mat3(&mut r));
        let (an_s, an_h) = (f_s(&c, &s0), f_h(&c, &s0));
        let mut num_s = Mat3::ZERO;
        for a in R3 {
            for b in R3 {
                num_s.0[a][b] = central(
                    |t| {
                        let mut s = s0.s;
                        s.0[a][b] += t;
                        energy_density(&c, &DirectorSample::new(s0.h, s))
                    },
                    h,
                );
            }
        }
        let num_h: Vec<f64> = R3
            .map(|a| {
                central(
                    |t| {
                        let mut hv = s0.h;
                        hv.0[a] += t;
                        energy_density(&c, &DirectorSample::new(hv, s0.s))
                    },
                    h,
                )
            })
            .collect();
        local = local.max(rel(&flat3(&num_s), &flat3(&an_s))).max(rel(&num_h, &an_h.0));
    }

    let grid = TorusGrid::periodic_2pi(16).unwrap();
    let model = ElasticModel::OseenFrank(FrankConstants::new(1.0, 0.8, 1.2, SplitMode::MinSplit).unwrap());
    let p = RegularizationParams::new(0.1, PenaltySchedule::Linear).unwrap();
    let mut d = band_limited_field(&grid, 3, 31).scaled(0.1);
    d.comps[2][0].re += 1.0;
    let q = grid.vector_to_grid(&variational_derivative(&grid, &d, &DirectorFields::new(&grid, &d), &model, &p));
    let total = |x: &SpectralVector| free_energy_of(&grid, &DirectorFields::new(&grid, x), &model, &p).total;
    let mut field = 0.0f64;
    for k in 0..20 {
        let psi = band_limited_field(&grid, 3, 200 + k).scaled(0.05);
        let psi_grid = grid.vector_to_grid(&psi);
        let pairing: f64 = grid.cell_volume() * q.iter().zip(&psi_grid).map(|(a, b)| a.dot(b)).sum::<f64>();
        let gateaux = central(
            |t| {
                let mut x = d.clone();
                x.axpy(t, &psi);
                total(&x)
            },
            1e-4,
        );
        field = field.max((gateaux - pairing).abs() / pairing.abs());
    }
    Verdict {
        id: 3,
        name: "derivative consistency",
        pass: local < 1e-6 && field < 1e-6,
        detail: format!("F_S/F_h {local:.2e}, q_delta {field:.2e} < 1e-6"),
    }
}

fn ellipticity() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(104);
    let mut worst = f64::INFINITY;
    let mut c = frank(&mut r, SplitMode::MinSplit);
    for i in 0..100_000 {
        if i % 1000 == 0 {
            c = frank(&mut r, if i % 2000 == 0 { SplitMode::MinSplit } else { SplitMode::EqualSplit });
        }
        let (a, b) = (vec3(&mut r), vec3(&mut r));
        let lam = &c.tensors().lambda;
        let mut form = 0.0;
        for (i, j, k, l) in (0..81).map(|p| (p / 27, p / 9 % 3, p / 3 % 3, p % 3)) {
            form += a.0[i] * b.0[j] * lam.get(i, j, k, l) * a.0[k] * b.0[l];
        }
        let [k1, k2, ..] = c.coefficients();
        worst = worst.min(form - k1.min(k2) * a.norm_sq() * b.norm_sq());
    }
    Verdict { id: 4, name: "ellipticity", pass: worst >= -1e-12, detail: format!("min margin {worst:.2e} >= -1e-12") }
}

fn sample_director(grid: &TorusGrid, kmax: usize, amplitude: f64, seed: u64) -> SpectralDirector {
    let mut d = band_limited_field(grid, kmax, seed).scaled(amplitude);
    d.comps[2][0].re += 1.0;
    SpectralDirector(d)
}

fn ericksen_identity() -> Verdict {
    let model = ElasticModel::OseenFrank(FrankConstants::new(1.0, 0.8, 1.2, SplitMode::MinSplit).unwrap());
    let p = RegularizationParams::new(0.1, PenaltySchedule::Linear).unwrap();
    let residual = |n: usize| {
        let grid = TorusGrid::periodic_2pi(n).unwrap();
        let d = sample_director(&grid, 4, 0.3, 41);
        let mut w = band_limited_field(&grid, 4, 42);
        grid.leray_project(&mut w);
        ericksen_identity_residual(&grid, &d, &model, &p, &w).map(|r| r.normalized).unwrap_or(f64::INFINITY)
    };
    let (coarse, fine) = (residual(16), residual(32));
    Verdict {
        id: 5,
        name: "ericksen identity",
        pass: fine < 1e-8 && fine < coarse,
        detail: format!("N=16 {coarse:.2e} -> N=32 {fine:.2e} < 1e-8"),
    }
}

fn coercivity() -> Verdict {
    let grid = TorusGrid::periodic_2pi(32).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..4 {
        let rep = coercivity_identity_check(&grid, &sample_director(&grid, 5, 0.5, 60 + seed));
        worst = worst.max(rep.first_relative()).max(rep.second_relative());
    }
    let shear = SpectralDirector(grid.vector_from_fn(|x| Vec3::new(0.0, x[0].sin(), 0.0)));
    let rep = coercivity_identity_check(&grid, &shear);
    let analytic = ((rep.grad_sq - 4.0 * PI.powi(3)).abs() / (4.0 * PI.powi(3))).max(rep.first_relative());
    Verdict {
        id: 6,
        name: "coercivity identities",
        pass: worst < 1e-10 && analytic < 1e-12,
        detail: format!("random {worst:.2e} < 1e-10, sin(x1)e2 {analytic:.2e}"),
    }
}

fn in_ball(r: &mut ChaCha8Rng) -> (Vec3, Mat3) {
    let (h, s) = (vec3(r), mat3(r));
    let (rh, rs) = (r.random_range(0.0..0.99), r.random_range(0.0..0.99));
    (h * (rh / h.norm()), s * (rs / s.norm_sq().sqrt()))
}

fn young_measures() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(109);
    let inv = RecessionInvariant { g: |h: &Vec3, s: &Mat3| 1.5 + h.dot(&s.mul_vec(h)) - s.trace() * h.0[2] };
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (ht, st) = in_ball(&mut r);
        let (a, b) = (ht.norm_sq(), st.norm_sq());
        let one = young_transform(|_, _| 1.0, &ht, &st).unwrap();
        let pen = young_transform(|h, s| (h.norm_sq() - 1.0) * (1.0 + s.norm_sq()), &ht, &st).unwrap();
        let fixed = young_transform(|h, s| inv.eval(h, s), &ht, &st).unwrap();
        let direct = inv.eval(&ht, &st);
        worst = worst
            .max((one - (1.0 - a) * (1.0 - b)).abs())
            .max((pen - (2.0 * a - 1.0)).abs())
            .max((fixed - direct).abs() / direct.abs().max(1.0));
    }
    let grid = TorusGrid::periodic_2pi(16).unwrap();
    let amp = Vec3::new(0.7, -0.2, 0.4);
    let mut lam_err = 0.0f64;
    for periods in [1, 2, 4] {
        let lam = FieldSamples::laminate(&grid, Vec3::unit(2), amp, periods);
        let linear: f64 = (0..3).map(|i| lam.integrate(|_, s| s.0[i][0]).abs()).fold(0.0, f64::max);
        let quad = lam.integrate(|_, s| s.norm_sq());
        let want = amp.norm_sq() * 8.0 * PI.powi(3);
        lam_err = lam_err.max(linear).max((quad - want).abs() / want);
    }
    Verdict {
        id: 9,
        name: "young-measure transform",
        pass: worst < 1e-13 && lam_err < 1e-10,
        detail: format!("transform {worst:.2e} < 1e-13, laminate {lam_err:.2e} < 1e-10"),
    }
}

fn load(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn column<'a>(cols: &'a [(String, Vec<f64>)], name: &str) -> &'a [f64] {
    &cols.iter().find(|c| c.0 == name).unwrap_or_else(|| panic!("missing column {name}")).1
}

/// Returns (verdict 7, penalty part of verdict 8).
fn energy_law(root: &Path) -> (Verdict, bool, String) {
    let cfg = load("energy_law.json");
    let dir = root.join("dt");
    if let Err(e) = run_to_dir(&cfg, &dir) {
        return (Verdict { id: 7, name: "discrete energy law", pass: false, detail: e.to_string() }, false, e.to_string());
    }
    let mut half = cfg.clone();
    half.time.dt /= 2.0;
    half.output.snapshot_cadence = 0;
    let dir_half = root.join("dt_half");
    if let Err(e) = run_to_dir(&half, &dir_half) {
        return (Verdict { id: 7, name: "discrete energy law", pass: false, detail: e.to_string() }, false, e.to_string());
    }
    let cols = read_energy_csv(&dir.join("energy.csv")).unwrap();
    let cols_half = read_energy_csv(&dir_half.join("energy.csv")).unwrap();
    let energy = column(&cols, "total");
    let e0 = energy[0];
    let rows = energy.len();
    let max_rise = energy.windows(2).map(|w| (w[1] - w[0]) / e0).fold(f64::NEG_INFINITY, f64::max);
    let res = column(&cols, "energy_eq_residual");
    let max_res = res.iter().copied().fold(0.0, f64::max);
    let res_half = column(&cols_half, "energy_eq_residual");
    let ratio = res_half.last().unwrap() / res.last().unwrap();
    let pass = rows == 501 && max_rise <= 1e-8 && max_res < 1e-3 && (0.4..=0.6).contains(&ratio);
    let law = Verdict {
        id: 7,
        name: "discrete energy law",
        pass,
        detail: format!("{rows} rows, max rise {max_rise:.2e} E0, residual {max_res:.2e} E0, dt/2 ratio {ratio:.3}"),
    };

    let eps = cfg.physics().unwrap().reg.epsilon();
    let pen = column(&cols, "norm_L2").iter().map(|l2| l2 * l2 / (4.0 * eps)).fold(0.0, f64::max);
    let pen_col = column(&cols, "penalty").iter().copied().fold(0.0, f64::max);
    let penalty_ok = pen <= e0 && pen_col <= e0;
    (law, penalty_ok, format!("max penalty {:.2e} E0", pen.max(pen_col) / e0))
}

fn sweep_criteria(root: &Path, penalty_ok: bool, penalty_detail: String) -> (Verdict, Verdict) {
    let cfg = load("sweep.json");
    let deltas = [1e-1, 3e-2, 1e-2, 3e-3];
    let summary = match sweep(&cfg, &deltas, root, None) {
        Ok(s) => s,
        Err(e) => {
            let v = |id, name| Verdict { id, name, pass: false, detail: e.to_string() };
            return (v(8, "penalty control"), v(10, "defect bound"));
        }
    };
    let mut norms = Vec::new();
    let mut defect_ok = true;
    let mut worst_ratio = 0.0f64;
    let mut worst_diff = 0.0f64;
    for (m, delta) in summary.members.iter().zip(deltas) {
        let dir = root.join(&m.directory);
        let cols = read_energy_csv(&dir.join("energy.csv")).unwrap();
        let e0 = column(&cols, "total")[0];
        norms.push(*column(&cols, "norm_L2").last().unwrap());
        let csv_max = column(&cols, "defect_total").iter().copied().fold(0.0, f64::max);
        let ratio = csv_max.max(m.max_defect_total) / (2.0 * e0);
        worst_ratio = worst_ratio.max(ratio);
        defect_ok &= ratio <= 1.0;

        let last = fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bin"))
            .max()
            .unwrap();
        let snap = read_snapshot(&last).unwrap();
        let grid = TorusGrid::new(snap.header.shape[0], snap.header.length).unwrap();
        let d = SpectralDirector(grid.vector_from_grid(&snap.values));
        worst_diff = worst_diff.max(defect_density(&grid, &d, delta).relative_difference());
    }
    let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let v8 = Verdict {
        id: 8,
        name: "penalty control",
        pass: penalty_ok && decreasing,
        detail: format!(
            "{penalty_detail}, final norm_L2 {}",
            norms.iter().map(|n| format!("{n:.2e}")).collect::<Vec<_>>().join(" > ")
        ),
    };
    let v10 = Verdict {
        id: 10,
        name: "defect bound",
        pass: defect_ok && worst_diff < 1e-10,
        detail: format!("max delta|Lap d|^2 / 2E0 {worst_ratio:.3}, hessian vs laplacian {worst_diff:.2e} < 1e-10"),
    };
    (v8, v10)
}

fn digest_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().is_some_and(|n| n != "run_summary.json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), Sha256::digest(fs::read(p).unwrap()).to_vec()))
        .collect()
}

fn determinism(root: &Path) -> Verdict {
    let mut cfg = load("energy_law.json");
    cfg.time.t_end = 0.05;
    cfg.output.snapshot_cadence = 10;
    let (a, b) = (root.join("a"), root.join("b"));
    for dir in [&a, &b] {
        if let Err(e) = run_to_dir(&cfg, dir) {
            return Verdict { id: 11, name: "determinism", pass: false, detail: e.to_string() };
        }
    }
    let (da, db) = (digest_dir(&a), digest_dir(&b));
    let has_csv = da.iter().any(|f| f.0 == "energy.csv");
    let snaps = da.iter().filter(|f| f.0.ends_with(".bin")).count();
    Verdict {
        id: 11,
        name: "determinism",
        pass: has_csv && snaps > 0 && da == db,
        detail: format!("{} files ({snaps} snapshots) byte-identical: {}", da.len(), da == db),
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut failed = 0;
    let mut emit = |v: Verdict, t: Instant| {
        report(&v, t.elapsed().as_secs_f64());
        if !v.pass {
            failed += 1;
        }
    };
    for f in [tensor_oracles, energy_forms, derivative_consistency, ellipticity, ericksen_identity, coercivity] {
        let t = Instant::now();
        emit(f(), t);
    }

    let t = Instant::now();
    let (law, penalty_ok, penalty_detail) = energy_law(&tmp.path().join("energy_law"));
    emit(law, t);
    let t = Instant::now();
    let (v8, v10) = sweep_criteria(&tmp.path().join("sweep"), penalty_ok, penalty_detail);
    emit(v8, t);

    let t = Instant::now();
    emit(young_measures(), t);
    emit(v10, Instant::now());
    let t = Instant::now();
    emit(determinism(&tmp.path().join("determinism")), t);

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
