use super::*;
use crate::toric::polytope_envelope;

fn fs_phi(x: &[f64]) -> f64 {
    // ½·log(1 + e^{2x}) without overflow
    let t = 2.0 * x[0];
    0.5 * (t.max(0.0) + (-t.abs()).exp().ln_1p())
}

fn twisted_phi(x: &[f64]) -> f64 {
    x[0].max(0.0) + (-x[0].abs()).exp().ln_1p()
}

fn g0(xi: f64) -> f64 {
    let xlx = |t: f64| if t <= 0.0 { 0.0 } else { t * t.ln() };
    0.5 * (xlx(xi) + xlx(1.0 - xi))
}

fn fs_model() -> ToricBundleModel {
    ToricBundleModel::from_potential_fn(
        LatticePolytope::unit_interval(),
        fs_phi,
        ModelGrid::default_for(1),
    )
    .unwrap()
}

fn twisted_model() -> ToricBundleModel {
    ToricBundleModel::from_potential_fn(
        LatticePolytope::unit_interval(),
        twisted_phi,
        ModelGrid::default_for(1),
    )
    .unwrap()
}

#[test]
fn auto_box_matches_potential_growth() {
    let r0 = fs_model().potential().grid().axis(0).hi();
    let r1 = twisted_model().potential().grid().axis(0).hi();
    assert!((r0 - 12.2).abs() < 0.1, "{r0}");
    assert!((r1 - 23.84).abs() < 0.01, "{r1}");
}

#[test]
fn level_one_gram_is_one_half() {
    let h = hilb_norm(&fs_model(), 1, &Density::FubiniStudy).unwrap();
    for w in h.log_diagonal().unwrap() {
        assert!((w - 0.5 * 0.5f64.ln()).abs() < 1e-6, "{w}");
    }
}

#[test]
fn ban_weights_match_symplectic_potential() {
    let b = ban_norm(&fs_model(), 2).unwrap();
    assert_eq!(b.labels(), &[vec![0], vec![1], vec![2]]);
    assert!((b.log_weights()[1] - 0.5f64.ln()).abs() < 2e-5);
    assert!(b.log_weights()[0].abs() < 1e-9 && b.log_weights()[2].abs() < 1e-9);

    let b = ban_norm(&fs_model(), 40).unwrap();
    for (a, w) in b.labels().iter().zip(b.log_weights()) {
        assert!((w - 40.0 * g0(a[0] as f64 / 40.0)).abs() < 40.0 * 1e-5);
    }
}

#[test]
fn symplectic_and_potential_models_agree() {
    let p = LatticePolytope::unit_interval();
    let ms =
        ToricBundleModel::from_symplectic_fn(p, |x| g0(x[0]), ModelGrid::default_for(1)).unwrap();
    assert_eq!(ms.authority(), Authority::Symplectic);
    let (a, b) = (
        ban_norm(&ms, 16).unwrap(),
        ban_norm(&fs_model(), 16).unwrap(),
    );
    for (x, y) in a.log_weights().iter().zip(b.log_weights()) {
        assert!((x - y).abs() < 1e-4, "{x} {y}");
    }
    assert!(ms.potential().interpolate(&[0.7]) - fs_phi(&[0.7]) < 1e-4);
}

#[test]
fn ban_norm_only_sees_the_envelope() {
    let p = LatticePolytope::unit_interval();
    let grid = Grid::uniform(-12.0, 12.0, 2049, 1).unwrap();
    let bumpy = GridFunction::from_fn(grid, Domain::Box, |x| {
        fs_phi(x) + 0.3 * (-(x[0] - 1.0).powi(2) * 4.0).exp()
    })
    .unwrap();
    let env = polytope_envelope(&bumpy, &p, 2048).unwrap();
    let m = ToricBundleModel::from_potential(p.clone(), bumpy, 2048).unwrap();
    let me = ToricBundleModel::from_potential(p, env, 2048).unwrap();
    for k in [1, 3, 10] {
        let (a, b) = (ban_norm(&m, k).unwrap(), ban_norm(&me, k).unwrap());
        for (x, y) in a.log_weights().iter().zip(b.log_weights()) {
            assert!((x - y).abs() < 1e-9, "k={k}: {x} {y}");
        }
    }
}

#[test]
fn bernstein_markov_gaps() {
    let m = fs_model();
    for (k, want) in [
        (25, 0.065162),
        (50, 0.039318),
        (100, 0.023076),
        (200, 0.013258),
    ] {
        let gap = bernstein_markov_gap(&m, k, &Density::FubiniStudy).unwrap();
        assert!((gap - want).abs() < 2e-5, "k={k}: {gap} vs {want}");
    }
}

#[test]
fn geodesic_deviation_table() {
    let (m0, m1) = (fs_model(), twisted_model());
    let table = [
        (0.0, [0.0652, 0.0393, 0.0231, 0.0133]),
        (0.5, [0.0838, 0.0492, 0.0282, 0.0158]),
    ];
    for (t, row) in table {
        for (k, want) in [25, 50, 100, 200].into_iter().zip(row) {
            let d =
                geodesic_quantization_experiment(&m0, &m1, k, t, &Density::FubiniStudy).unwrap();
            assert!((d - want).abs() < 5e-4, "t={t} k={k}: {d} vs {want}");
        }
    }
}

#[test]
fn isometry_rows_and_rate() {
    let rows =
        isometry_experiment(&fs_model(), &twisted_model(), 1.0, &[25, 50, 100, 200, 400]).unwrap();
    let want = [0.01041, 0.005127, 0.002538, 0.001261, 0.000628];
    for (r, w) in rows.iter().zip(want) {
        assert!((r.limit - 0.25).abs() < 1e-5, "{}", r.limit);
        assert!((r.gap - w).abs() < 2e-5, "k={}: {} vs {w}", r.k, r.gap);
    }
    let fit = fit_rate(&rows).unwrap();
    assert!(fit.rms_residual < 0.01 * rows[1].gap);
}

#[test]
fn fs_potential_of_ban_norm_converges() {
    let m = fs_model();
    for k in [4, 16, 64] {
        let b = ban_norm(&m, k).unwrap();
        let phi = fs_potential(FsNorm::Sup(&b), k, m.potential().grid()).unwrap();
        let err = phi.max_abs_diff(m.potential()).unwrap();
        assert!(
            err <= ((k + 1) as f64).ln() / k as f64 + 1e-9,
            "k={k}: {err}"
        );
    }
}

#[test]
fn hermitian_fs_needs_matching_labels() {
    let m = fs_model();
    let h = hilb_norm(&m, 3, &Density::Lebesgue).unwrap();
    let labels = m.polytope().lattice_points(2);
    let r = fs_potential(
        FsNorm::Hermitian {
            norm: &h,
            labels: &labels,
        },
        3,
        m.potential().grid(),
    );
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn zero_density_is_rejected() {
    let m = fs_model();
    let rho = GridFunction::from_fn(Grid::uniform(-1.0, 1.0, 5, 1).unwrap(), Domain::Box, |_| {
        0.0
    })
    .unwrap();
    assert!(matches!(
        hilb_norm(&m, 2, &Density::Grid(rho)),
        Err(Error::ZeroMass)
    ));
}

#[test]
fn char_recovers_limit_of_ban_family() {
    let m = fs_model();
    let ks = [4, 8, 16, 32, 64];
    let fam = perturbed_family(&m, &ks, 0.0, 0.5).unwrap();
    let res = char_experiment(&fam, m.polytope(), CharOptions::default()).unwrap();
    for (i, x) in res.limit.grid().points().enumerate() {
        assert!((res.limit.values()[i] - g0(x[0]) - 0.5 / 8.0).abs() < 1e-5);
    }
    assert!(res.rows.windows(2).all(|w| w[1].value < w[0].value));

    let mut bad = fam.clone();
    bad.insert_level(
        8,
        m.polytope().lattice_points(8).into_iter().map(|a| (a, 5.0)),
    );
    assert!(matches!(
        char_experiment(&bad, m.polytope(), CharOptions::default()),
        Err(Error::NotSubmultiplicative { .. })
    ));
}
