use std::f64::consts::PI;

use g2zhu::calculus::{
    apply_dx, contour_integral, moduli_derivative, period_table, serre_derivative, Cycle, Direction, FdConfig, QuadratureConfig,
};
use g2zhu::elliptic::{dedekind_eta, eisenstein, min_lattice_distance, EllipticTable, SeriesConfig, TorusModulus};
use g2zhu::fock::genus2_levels;
use g2zhu::heisenberg::{h_npoint, virasoro_one_point, z2_partition, ModulePair};
use g2zhu::sewing::{validate_moduli, ModuliPoint, SewingContext, SurfacePoint, Torus};
use g2zhu::zhu::{ZhuContext, ZhuWeight};
use g2zhu::Error;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn ctx(tau1: Complex64, tau2: Complex64, eps: Complex64) -> SewingContext {
    let p = ModuliPoint::new(tau1, tau2, eps).unwrap();
    SewingContext::new(&p, 16, &SeriesConfig::default()).unwrap()
}

fn e2(tau: Complex64) -> Complex64 {
    eisenstein(2, &TorusModulus::new(tau).unwrap(), &SeriesConfig::default()).unwrap()
}

fn eta(tau: Complex64) -> Complex64 {
    dedekind_eta(&TorusModulus::new(tau).unwrap(), &SeriesConfig::default()).unwrap()
}

#[test]
fn eta_shift_rotates_by_twelfth_root() {
    for tau in [c(0.0, 1.0), c(0.3, 0.9), c(-0.2, 1.4)] {
        let lhs = eta(tau + 1.0);
        let rhs = Complex64::from_polar(1.0, PI / 12.0) * eta(tau);
        assert!(rel(lhs, rhs) < 1e-13, "{tau}: {lhs} vs {rhs}");
    }
}

#[test]
fn e4_transforms_with_weight_four() {
    let cfg = SeriesConfig::default();
    let tau = c(0.0, 2.0);
    let lhs = eisenstein(4, &TorusModulus::new(-1.0 / tau).unwrap(), &cfg).unwrap();
    let rhs = tau.powi(4) * eisenstein(4, &TorusModulus::new(tau).unwrap(), &cfg).unwrap();
    assert!(rel(lhs, rhs) < 1e-12);
}

#[test]
fn lattice_distances() {
    assert!((min_lattice_distance(c(0.0, 1.0)) - 2.0 * PI).abs() < 1e-12);
    assert!((min_lattice_distance(c(0.0, 2.0)) - 2.0 * PI).abs() < 1e-12);
    assert!((min_lattice_distance(c(0.5, 0.5)) - PI * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn sewing_domain_boundary() {
    let i = c(0.0, 1.0);
    assert!(validate_moduli(i, i, c(0.0, 0.0)).is_ok());
    assert!(validate_moduli(i, i, c(1.0, 0.0)).is_ok());
    assert!(matches!(validate_moduli(i, i, c(PI * PI, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn logdet_leading_order() {
    let (t1, t2) = (c(0.0, 1.0), c(0.1, 1.2));
    let target = -e2(t1) * e2(t2);
    for eps in [c(1e-3, 0.0), c(0.0, 2e-3)] {
        let got = ctx(t1, t2, eps).logdet() / (eps * eps);
        assert!(rel(got, target) < 1e-4, "{eps}: {got} vs {target}");
    }
}

#[test]
fn level_two_coefficient_of_partition_function() {
    let (t1, t2) = (c(0.0, 1.0), c(0.1, 1.2));
    let eps = c(0.08, 0.02);
    let p = ModuliPoint::new(t1, t2, eps).unwrap();
    let levels = genus2_levels(&[], &[], 2, &p, &SeriesConfig::default()).unwrap();
    let got = levels[2] * eta(t1) * eta(t2) / (eps * eps);
    let want = 0.5 * e2(t1) * e2(t2);
    assert!(rel(got, want) < 1e-12);

    let mut coeff = c(0.0, 0.0);
    let n = 16;
    let r = 0.02;
    for j in 0..n {
        let e = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
        let z = z2_partition(&ctx(t1, t2, e), &ModulePair::vacuum()) * eta(t1) * eta(t2);
        coeff += z / (e * e) / n as f64;
    }
    assert!(rel(coeff, want) < 1e-9, "{coeff} vs {want}");
}

#[test]
fn off_diagonal_period_leading_order() {
    let eps = c(1e-3, 5e-4);
    let om = ctx(c(0.0, 1.0), c(0.0, 1.3), eps).period_matrix();
    let want = -eps / (2.0 * PI * I);
    assert!(rel(om.get(0, 1), want) < 1e-5);

    let p = ModuliPoint::new(c(0.0, 1.0), c(0.0, 1.3), eps).unwrap();
    let d = moduli_derivative(
        |q| Ok(SewingContext::new(q, 16, &SeriesConfig::default())?.period_matrix().get(0, 1)),
        Direction::Eps,
        &p,
        &FdConfig::default(),
    )
    .unwrap();
    assert!(rel(d, want) < 1e-5);
}

#[test]
fn partition_function_at_zero_eps() {
    let (t1, t2) = (c(0.0, 1.0), c(0.2, 1.1));
    let z = z2_partition(&ctx(t1, t2, c(0.0, 0.0)), &ModulePair::vacuum());
    assert!(rel(z, 1.0 / (eta(t1) * eta(t2))) < 1e-13);
}

#[test]
fn lattice_shifted_partition_function() {
    let s = ctx(c(0.0, 1.0), c(0.0, 1.1), c(0.1, 0.0));
    let lam = ModulePair::new(c(1.0, 0.0), c(0.0, 0.0));
    let ratio = z2_partition(&s, &lam) / s.z_m();
    let want = (I * PI * s.period_matrix().get(0, 0)).exp();
    assert!(rel(ratio, want) < 1e-12);
}

#[test]
fn odd_vacuum_correlators_vanish() {
    let s = ctx(c(0.0, 1.0), c(0.0, 1.1), c(0.15, 0.0));
    let pts = [
        SurfacePoint::new(Torus::One, c(0.4, 0.3)),
        SurfacePoint::new(Torus::Two, c(-0.5, 0.2)),
        SurfacePoint::new(Torus::One, c(0.1, -0.6)),
    ];
    let v = h_npoint(&s, &ModulePair::vacuum(), &pts).unwrap();
    assert_eq!(v, c(0.0, 0.0));
    let two = h_npoint(&s, &ModulePair::vacuum(), &pts[..2]).unwrap();
    let want = s.omega(&pts[0], &pts[1]).unwrap() * s.z_m();
    assert!(rel(two, want) < 1e-12);
}

#[test]
fn virasoro_one_point_at_zero_eps() {
    let t1 = c(0.0, 1.0);
    let s = ctx(t1, c(0.0, 1.2), c(0.0, 0.0));
    let x = SurfacePoint::new(Torus::One, c(0.3, 0.2));
    let z = s.z_m();
    let vac = virasoro_one_point(&s, &ModulePair::vacuum(), &x).unwrap();
    assert!(rel(vac, 0.5 * e2(t1) * z) < 1e-12);
    let lam = ModulePair::new(c(1.0, 0.0), c(0.0, 0.0));
    let shifted = virasoro_one_point(&s, &lam, &x).unwrap();
    assert!(rel(shifted, (0.5 + 0.5 * e2(t1)) * z2_partition(&s, &lam)) < 1e-12);
}

#[test]
fn inverse_square_partition_function_is_annihilated() {
    let s = ctx(c(0.0, 1.0), c(0.1, 1.1), c(0.12, 0.03));
    let fd = FdConfig::default();
    let g = |q: &ModuliPoint| {
        let z = SewingContext::new(q, 16, &SeriesConfig::default())?.z_m();
        Ok(1.0 / (z * z))
    };
    for x in [SurfacePoint::new(Torus::One, c(0.5, 0.4)), SurfacePoint::new(Torus::Two, c(-0.3, 0.6))] {
        let scale = (s.projective(&x).unwrap() * g(s.point()).unwrap()).norm();
        let r = serre_derivative(g, 1.0, &x, &s, &fd).unwrap();
        assert!(r.norm() / scale < 1e-7, "{}", r.norm() / scale);
        let d = apply_dx(g, &x, &s, &fd).unwrap();
        assert!(d.norm() > 1e-3 * scale);
    }
}

#[test]
fn zhu_kernel_has_unit_simple_pole() {
    let s = ctx(c(0.0, 1.0), c(0.0, 1.1), c(0.1, 0.05));
    let zhu = ZhuContext::new(&s, ZhuWeight::new(2).unwrap()).unwrap();
    for t in Torus::BOTH {
        let x = SurfacePoint::new(t, c(0.6, 0.5));
        for d in [1e-4, 1e-5] {
            let y = SurfacePoint::new(t, x.z - c(d, 0.0));
            let v = zhu.gen_weierstrass(0, 0, &x, &y).unwrap() * d;
            assert!((v - 1.0).norm() < 50.0 * d, "{t:?} {d}: {v}");
        }
        let r = 0.05;
        let n = 64;
        let mut res = c(0.0, 0.0);
        for j in 0..n {
            let u = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
            let y = SurfacePoint::new(t, x.z - u);
            res += zhu.gen_weierstrass(0, 0, &x, &y).unwrap() * u / n as f64;
        }
        assert!((res - 1.0).norm() < 1e-10, "{t:?}: {res}");
    }
}

#[test]
fn quadrature_doubling_is_stable() {
    let p = ModuliPoint::new(c(0.0, 1.0), c(0.1, 1.2), c(0.15, 0.0)).unwrap();
    let s = SewingContext::new(&p, 16, &SeriesConfig::default()).unwrap();
    let quad = QuadratureConfig::default();
    let nus = |x: &SurfacePoint| Ok([s.nu(Torus::One, x)?, s.nu(Torus::Two, x)?, s.projective(x)?]);
    let a = period_table(nus, &p, &quad).unwrap();
    let b = period_table(nus, &p, &quad.doubled()).unwrap();
    for r in 0..3 {
        for k in 0..3 {
            assert!((a[r][k] - b[r][k]).norm() < 1e-10 * a[r][k].norm().max(1.0), "{r}{k}");
        }
    }
    let w = |x: &SurfacePoint| s.nu(Torus::Two, x);
    let alpha = contour_integral(w, Cycle::Alpha(Torus::Two), &p, &quad).unwrap();
    let alpha2 = contour_integral(w, Cycle::Alpha(Torus::Two), &p, &quad.doubled()).unwrap();
    assert!((alpha - alpha2).norm() < 1e-10);
    assert!((alpha / (2.0 * PI * I) - 1.0).norm() < 1e-10);
}

#[test]
fn elliptic_table_matches_free_functions() {
    let m = TorusModulus::new(c(0.1, 1.1)).unwrap();
    let cfg = SeriesConfig::default();
    let t = EllipticTable::new(&m, &cfg).unwrap();
    assert!(rel(t.eisenstein(2), eisenstein(2, &m, &cfg).unwrap()) < 1e-14);
    assert!(rel(t.eta(), dedekind_eta(&m, &cfg).unwrap()) < 1e-14);
}
