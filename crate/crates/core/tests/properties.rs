use std::f64::consts::PI;

use chordlab::dynamics::{
    decoherence_matrix, evolve_reflections, integrate_centre, Flow, HamiltonianModel, LindbladChannel, WeightedSamples,
};
use chordlab::fock::{lindblad_evolve, FockDensityMatrix, FockGenerator};
use chordlab::husimi::{husimi_fourier, husimi_from_fourier, husimi_from_lwc, husimi_from_wigner, lwc_family};
use chordlab::lwc::{
    lwc_direct, lwc_from_chord, shear_phi_qq, xi_grid, LwcWindow, PositionDensity, SemiclassicalLwc,
};
use chordlab::phase_space::{
    centre_from_chord_grid, chord_from_centre_grid, skew_product, symplectic_matrix, translate_chord_grid,
    CenteredGrid, ChordVector, Mat2, PhaseSpacePoint, Vec2, WignerGrid,
};
use chordlab::states::{
    branches_at, default_caustic_threshold, wkb_short_chord_function, ChordFunction, CoherentState, CurveChordFunction,
    CurveFamily, LagrangianCurve, Mixture,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = Vec2> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| Vec2::new(a, b))
}

fn gaussian_blob(grid: CenteredGrid, centres: &[(f64, f64, f64)]) -> WignerGrid {
    let h = grid.hbar;
    WignerGrid::sample(grid, |x| {
        centres
            .iter()
            .map(|&(w, p, q)| w * (-((x.p - p).powi(2) + (x.q - q).powi(2)) / h).exp() / (PI * h))
            .sum()
    })
    .unwrap()
}

fn symplectic(a: f64, b: f64, c: f64) -> Mat2 {
    Mat2::new(a, b, c, (1.0 + b * c) / a)
}

proptest! {
    #[test]
    fn skew_product_is_antisymmetric_and_bilinear(a in vec2(), b in vec2(), c in vec2(), s in -3.0..3.0f64) {
        prop_assert!((skew_product(a, b) + skew_product(b, a)).abs() < 1e-12);
        prop_assert_eq!(skew_product(a, a), 0.0);
        let lhs = skew_product(a * s + c, b);
        let rhs = s * skew_product(a, b) + skew_product(c, b);
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
        prop_assert_eq!(skew_product(a, b), (symplectic_matrix() * a).dot(&b));
    }

    #[test]
    fn symplectic_maps_preserve_skew_product(a in vec2(), b in vec2(), m in 0.3..2.0f64, n in -1.0..1.0f64, k in -1.0..1.0f64) {
        let c = symplectic(m, n, k);
        prop_assert!((skew_product(c * a, c * b) - skew_product(a, b)).abs() < 1e-10 * (1.0 + skew_product(a, b).abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grid_round_trip_and_hermiticity(p0 in -0.6..0.6f64, q0 in -0.6..0.6f64, p1 in -0.6..0.6f64, q1 in -0.6..0.6f64, w in 0.1..0.9f64) {
        let grid = CenteredGrid::square(2.5, 64, 0.1).unwrap();
        let wg = gaussian_blob(grid, &[(w, p0, q0), (1.0 - w, p1, q1)]);
        let chi = chord_from_centre_grid(&wg).unwrap().value;
        prop_assert!(chi.hermiticity_defect() < 1e-12);
        let back = centre_from_chord_grid(&chi).unwrap().value;
        let num: f64 = back.values.iter().zip(&wg.values).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = wg.values.iter().map(|a| a * a).sum();
        prop_assert!((num / den).sqrt() < 1e-10);
    }

    #[test]
    fn translation_covariance(p0 in -0.4..0.4f64, q0 in -0.4..0.4f64, a in -6i32..6, b in -6i32..6) {
        let grid = CenteredGrid::square(3.0, 64, 0.1).unwrap();
        let wg = gaussian_blob(grid, &[(1.0, p0, q0)]);
        let chi = chord_from_centre_grid(&wg).unwrap().value;
        let eta = ChordVector::new(a as f64 * grid.p_spacing(), b as f64 * grid.q_spacing());
        let moved = centre_from_chord_grid(&translate_chord_grid(&chi, eta)).unwrap().value;
        let m = grid.points as i32;
        for i in 12..m - 12 {
            for j in 12..m - 12 {
                let expected = wg.at((i - a) as usize, (j - b) as usize);
                prop_assert!((moved.at(i as usize, j as usize) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wkb_gradient_gives_curve_means(r in 0.1..0.8f64, p0 in -0.5..0.5f64, q0 in -0.5..0.5f64) {
        let hbar = 0.1;
        let c = LagrangianCurve::circle(r * r / 2.0, PhaseSpacePoint::new(p0, q0), 512).unwrap();
        let mean = c.mean();
        let f = CurveChordFunction::new(&c, hbar).unwrap();
        let h = 1e-4;
        let s = 2.0 * PI * hbar / (2.0 * h);
        let dq = (f.value(ChordVector::new(0.0, h)) - f.value(ChordVector::new(0.0, -h))) * s;
        let dp = (f.value(ChordVector::new(h, 0.0)) - f.value(ChordVector::new(-h, 0.0))) * s;
        prop_assert!((dq.im * hbar - mean.p).abs() < 1e-6);
        prop_assert!((-dp.im * hbar - mean.q).abs() < 1e-6);
        let direct = wkb_short_chord_function(&c, ChordVector::new(h, -h), hbar).unwrap();
        prop_assert!(direct.warnings.is_empty());
    }

    #[test]
    fn reflection_symmetric_curves_pair_branches(e in 0.1..1.0f64, frac in -0.95..0.95f64, pendulum in any::<bool>()) {
        let family = if pendulum { CurveFamily::Pendulum { k: 1.0, energy: e - 1.0 } } else { CurveFamily::Quartic { energy: e } };
        let c = LagrangianCurve::from_family(&family, 1024, 1e-3).unwrap();
        let (lo, hi) = c.q_range();
        let q = 0.5 * (lo + hi) + frac * 0.5 * (hi - lo);
        let b = branches_at(&c, q, 1e6).unwrap();
        prop_assert_eq!(b.branches.len() % 2, 0);
        let n = b.branches.len();
        for k in 0..n / 2 {
            let (x, y) = (&b.branches[k], &b.branches[n - 1 - k]);
            prop_assert!((x.p + y.p).abs() < 1e-8);
            prop_assert!((x.amplitude - y.amplitude).abs() < 1e-6 * x.amplitude);
        }
    }

    #[test]
    fn caustic_flag_tracks_amplitude(frac in 0.0..0.999999f64, threshold in 1.0..100.0f64) {
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::ORIGIN, 1024).unwrap();
        let b = branches_at(&c, frac, threshold).unwrap();
        for br in &b.branches {
            let p = (1.0 - frac * frac).sqrt();
            prop_assert!((br.amplitude - 1.0 / p).abs() < 1e-6 * br.amplitude);
            prop_assert_eq!(br.caustic, br.slope.abs() > threshold);
        }
    }
}

fn random_quadratic(k11: f64, k12: f64, k22: f64) -> HamiltonianModel {
    HamiltonianModel::Quadratic { k: [[k11, k12], [k12, k22]] }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn phi_is_psd_and_grows_without_dissipation(
        k11 in -1.0..1.0f64, k12 in -1.0..1.0f64, k22 in -1.0..1.0f64,
        l1 in vec2(), l2 in vec2(), s in -1.0..1.0f64,
        xi in vec2(),
    ) {
        let h = random_quadratic(k11, k12, k22);
        let ch = [LindbladChannel::hermitian([l1[0], l1[1]]), LindbladChannel::new([l2[0], l2[1]], [s * l2[0], s * l2[1]])];
        let xi = ChordVector::from_vec2(xi);
        let mut last = 0.0;
        for k in 1..=4 {
            let phi = decoherence_matrix(&h, &ch, PhaseSpacePoint::ORIGIN, 0.25 * k as f64, 1e-2).unwrap().phi;
            let eig = phi.symmetric_eigenvalues();
            let scale = phi.norm().max(1.0);
            prop_assert!(eig.min() >= -1e-12 * scale);
            let v = xi.quadratic_form(&phi);
            prop_assert!(v >= last - 1e-10 * scale);
            last = v;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_is_symplectically_covariant(
        k11 in -1.0..1.0f64, k12 in -1.0..1.0f64, k22 in -1.0..1.0f64,
        l in vec2(), m in vec2(),
        a in 0.4..2.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64,
    ) {
        let h = random_quadratic(k11, k12, k22);
        let ch = [LindbladChannel::new([l[0], l[1]], [0.3 * m[0], 0.3 * m[1]])];
        let cm = symplectic(a, b, c);
        let h2 = h.transformed(&cm).unwrap();
        let ch2: Vec<_> = ch.iter().map(|x| x.transformed(&cm).unwrap()).collect();
        let t = 0.8;
        let phi = decoherence_matrix(&h, &ch, PhaseSpacePoint::ORIGIN, t, 1e-3).unwrap().phi;
        let phi2 = decoherence_matrix(&h2, &ch2, PhaseSpacePoint::ORIGIN, t, 1e-3).unwrap().phi;
        let pulled = cm.transpose() * phi2 * cm;
        prop_assert!((pulled - phi).abs().max() < 1e-8 * phi.norm().max(1.0), "{} vs {}", pulled, phi);
    }
}

/// Independent Gaussian transport: mean `e^{Mt}η`, covariance from the
/// Lyapunov equation `Σ' = MΣ + ΣMᵀ + ħ J A Jᵀ`.
fn gaussian_chord(k: Mat2, gamma: f64, a: Mat2, eta: Vec2, hbar: f64, t: f64, xi: ChordVector) -> Complex64 {
    let j = symplectic_matrix();
    let m = j * k - Mat2::identity() * gamma;
    let d = j * a * j.transpose() * hbar;
    let mean = (m * t).exp() * eta;
    let mut s = Mat2::identity() * (hbar / 2.0);
    let n = 4000;
    let dt = t / n as f64;
    let f = |s: Mat2| m * s + s * m.transpose() + d;
    for _ in 0..n {
        let k1 = f(s);
        let k2 = f(s + k1 * (dt / 2.0));
        let k3 = f(s + k2 * (dt / 2.0));
        let k4 = f(s + k3 * dt);
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    let jx = j * xi.to_vec2();
    let phase = PhaseSpacePoint::from_vec2(mean).wedge(xi) / hbar;
    Complex64::from_polar((-(jx.dot(&(s * jx))) / (2.0 * hbar * hbar)).exp(), phase) / (2.0 * PI * hbar)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn quadratic_transport_is_exact(
        k11 in 0.2..1.0f64, k12 in -0.2..0.2f64, k22 in 0.2..1.0f64,
        l in vec2(), damping in 0.0..0.3f64,
        p0 in -0.5..0.5f64, q0 in -0.5..0.5f64,
    ) {
        let hbar = 0.1;
        let t = 0.7;
        let h = random_quadratic(k11, k12, k22);
        let ch = [LindbladChannel::hermitian([0.2 * l[0], 0.2 * l[1]]), LindbladChannel::damping(damping)];
        let grid = CenteredGrid::square(2.5, 64, hbar).unwrap();
        let wg = gaussian_blob(grid, &[(1.0, p0, q0)]);
        let samples = WeightedSamples::from_wigner_grid(&wg).unwrap();
        let ev = evolve_reflections(&samples, &h, &ch, t, 1e-3, hbar).unwrap().value;
        let k = Mat2::new(k11, k12, k12, k22);
        let a: Mat2 = ch.iter().map(|c| c.diffusion()).sum();
        let gamma: f64 = ch.iter().map(|c| c.dissipation_coefficient()).sum();
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.2), (-0.5, 0.6), (0.9, 0.1)] {
            let xi = ChordVector::new(x, y);
            let exact = gaussian_chord(k, gamma, a, Vec2::new(p0, q0), hbar, t, xi);
            prop_assert!((ev.value(xi) - exact).norm() * 2.0 * PI * hbar < 1e-6);
        }
    }

    #[test]
    fn fock_evolution_preserves_state_and_follows_centre_flow(
        k11 in 0.5..1.5f64, k12 in -0.3..0.3f64, k22 in 0.5..1.5f64,
        l in vec2(), damping in 0.0..0.5f64,
        p0 in -0.4..0.4f64, q0 in -0.4..0.4f64,
    ) {
        let hbar = 0.1;
        let h = random_quadratic(k11, k12, k22);
        let ch = [LindbladChannel::hermitian([0.1 * l[0], 0.1 * l[1]]), LindbladChannel::damping(damping)];
        let eta = PhaseSpacePoint::new(p0, q0);
        let rho0 = FockDensityMatrix::coherent(eta, hbar, 40).unwrap();
        let gen = FockGenerator::new(&h, &ch, hbar, 40).unwrap();
        let t = 1.0;
        let rho = lindblad_evolve(&rho0, &gen, t, 1e-3).unwrap();
        prop_assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
        let classical = integrate_centre(&Flow::new(&h, &ch), eta, t, 2000, 1.0).unwrap();
        let m = rho.mean();
        prop_assert!((m.p - classical.p).abs() < 1e-6 && (m.q - classical.q).abs() < 1e-6, "{:?} vs {:?}", m, classical);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lwc_is_hermitian_and_matches_direct_route(p0 in -0.6..0.6f64, q0 in -0.5..0.5f64, sign in prop::sample::select(vec![1.0, -1.0]), wq in -0.4..0.4f64) {
        let hbar = 0.05;
        let rho = FockDensityMatrix::cat(PhaseSpacePoint::new(p0, q0), sign, hbar, 80).unwrap();
        let w = LwcWindow::canonical(wq, hbar).unwrap();
        let h = 0.01;
        let pos = PositionDensity::from_fock(&rho, -2.5, h, 501).unwrap();
        let xs: Vec<f64> = (-4..=4).map(|j| 2.0 * h * 5.0 * j as f64).collect();
        let sample = lwc_from_chord(&rho, &w, &xs).unwrap().value;
        prop_assert!(sample.hermiticity_defect() < 1e-10);
        prop_assert_eq!(sample.normalized().unwrap()[4], Complex64::new(1.0, 0.0));
        for (x, c) in xs.iter().zip(&sample.c) {
            let d = lwc_direct(&pos, &w, *x).unwrap();
            prop_assert!((d - c).norm() < 1e-6, "{} {} {}", x, d, c);
        }
    }

    #[test]
    fn lwc_is_linear_in_the_state(p0 in -0.6..0.6f64, q0 in -0.6..0.6f64, weight in 0.1..0.9f64, wq in -0.5..0.5f64, x in -0.4..0.4f64) {
        let hbar = 0.05;
        let a = CoherentState::new(PhaseSpacePoint::new(p0, q0), hbar).unwrap();
        let b = CoherentState::new(PhaseSpacePoint::new(-q0, p0), hbar).unwrap();
        let mix = Mixture::new(vec![(weight, Box::new(a)), (1.0 - weight, Box::new(b))]).unwrap();
        let w = LwcWindow::canonical(wq, hbar).unwrap();
        let c = lwc_from_chord(&mix, &w, &[x]).unwrap().value.c[0];
        let ca = lwc_from_chord(&a, &w, &[x]).unwrap().value.c[0];
        let cb = lwc_from_chord(&b, &w, &[x]).unwrap().value.c[0];
        prop_assert!((c - (ca * weight + cb * (1.0 - weight))).norm() < 1e-12);
    }

    #[test]
    fn quadratic_form_tracks_curve_state_away_from_caustics(q in -0.5..0.5f64, frac in 0.0..1.0f64) {
        let hbar = 0.001;
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::ORIGIN, 8192).unwrap();
        let w = LwcWindow::canonical(q, hbar).unwrap();
        let sc = SemiclassicalLwc::pure(&c, &w, default_caustic_threshold(hbar)).unwrap().value;
        prop_assert!(sc.branches.iter().all(|b| b.slope.abs() < 1.0));
        let chi = CurveChordFunction::new(&c, hbar).unwrap();
        let x = frac * hbar.sqrt();
        let exact = lwc_from_chord(&chi, &w, &[0.0, x]).unwrap().value;
        prop_assert!((sc.quadratic(x) - exact.c[1]).norm() < 5e-2 * exact.c[0].norm());
    }

    #[test]
    fn closed_form_spectrum_peaks_sit_on_branch_momenta(q in -0.7..0.7f64) {
        let hbar = 0.01;
        let c = LagrangianCurve::circle(0.5, PhaseSpacePoint::ORIGIN, 2048).unwrap();
        let w = LwcWindow::canonical(q, hbar).unwrap();
        let sc = SemiclassicalLwc::pure(&c, &w, default_caustic_threshold(hbar)).unwrap().value;
        for b in &sc.branches {
            let d = 1e-6;
            let s = sc.spectrum_closed_form(&[b.p - d, b.p, b.p + d]).value.s;
            prop_assert!(s[1] >= s[0] && s[1] >= s[2]);
        }
    }

    #[test]
    fn husimi_outputs_agree_and_stay_nonnegative(p0 in -0.5..0.5f64, q0 in -0.5..0.5f64) {
        let hbar = 0.05;
        let s = CoherentState::new(PhaseSpacePoint::new(p0, q0), hbar).unwrap();
        let grid = CenteredGrid::square(2.8, 56, hbar).unwrap();
        let xi = xi_grid(2.0, 512).unwrap();
        let family = lwc_family(&s, &grid, (hbar / 2.0).sqrt(), &xi).unwrap().value;
        let rec = husimi_from_lwc(&family, &grid).unwrap().value;
        let via = husimi_from_fourier(&husimi_fourier(&s), &grid).unwrap().value;
        let wide = CenteredGrid::square(4.0, 80, hbar).unwrap();
        let conv = husimi_from_wigner(&s.wigner_grid(&wide).unwrap(), &grid).unwrap().value;
        for k in 0..grid.len() {
            prop_assert!((rec.values[k] - via.values[k]).abs() < 1e-6);
            prop_assert!((conv.values[k] - via.values[k]).abs() < 1e-8);
        }
        prop_assert!(rec.min() > -1e-10 && conv.min() > -1e-10);
    }
}

proptest! {
    #[test]
    fn line_variance_grows_with_slope_beyond_its_vertex(
        a in 0.0..2.0f64, c in 0.0..2.0f64, corr in -1.0..1.0f64,
        s1 in 0.0..5.0f64, ds in 0.0..5.0f64, hbar in 0.001..0.1f64,
    ) {
        let b = corr * (a * c).sqrt();
        let phi = Mat2::new(a, b, b, c);
        let delta2 = hbar;
        let var = |s: f64| hbar * shear_phi_qq(&phi, s) + delta2 * s * s;
        let vertex = -hbar * b / (hbar * a + delta2);
        let diag = Mat2::new(a, 0.0, 0.0, c);
        let dvar = |s: f64| hbar * shear_phi_qq(&diag, s) + delta2 * s * s;
        prop_assert!(dvar(s1 + ds) >= dvar(s1) - 1e-14);
        prop_assert!(dvar(-(s1 + ds)) >= dvar(-s1) - 1e-14);
        let (u, v) = (vertex + s1, vertex + s1 + ds);
        prop_assert!(var(v) >= var(u) - 1e-12);
    }
}
